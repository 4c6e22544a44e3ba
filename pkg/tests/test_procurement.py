"""Procurement workflow rules: award selection, transitions, and admin ops."""

import pytest

from pams import errors, payloads
from pams.procurement import PrLine, apply_tx, select_winning_quote

CHAIR = {"description": "office chair", "quantity": 4, "unit": "pc", "specs": "mesh"}
DESK = {"description": "desk", "quantity": 2, "unit": "pc", "specs": "120cm"}


def quotes(*totals_per_unit):
    return [
        {"supplier": f"s{i}", "unit_prices": list(prices)}
        for i, prices in enumerate(totals_per_unit)
    ]


def seed_roles(builder):
    builder.add_user("erin", ["employee"])
    builder.add_user("cass", ["canvasser"])
    builder.add_user("ines", ["inspector"])
    builder.add_user("carl", ["property_custodian"])


def expect_tx_error(builder, code, tx_type, author, payload):
    tx = builder.tx(tx_type, author, payload)
    with pytest.raises(errors.TxError) as err:
        apply_tx(builder.chain.state, tx)
    assert err.value.code == code, err.value


# -- award rule -------------------------------------------------------------------


def test_winner_lowest_total():
    lines = (PrLine("chair", 1, "pc", ""),)
    assert select_winning_quote(quotes((100,), (90,), (95,)), lines) == 1


def test_winner_tie_breaks_to_lowest_index():
    lines = (PrLine("chair", 1, "pc", ""),)
    assert select_winning_quote(quotes((90,), (90,), (95,)), lines) == 0


def test_winner_weighs_quantities():
    # 10x line A dominates: (10*5 + 1*100) = 150 vs (10*9 + 1*10) = 100.
    lines = (PrLine("cable", 10, "pc", ""), PrLine("switch", 1, "pc", ""))
    assert select_winning_quote(quotes((5, 100), (9, 10)), lines) == 1


def test_incomplete_quote_rejected():
    lines = (PrLine("chair", 1, "pc", ""), PrLine("desk", 1, "pc", ""))
    with pytest.raises(errors.TxError) as err:
        select_winning_quote(quotes((90,)), lines)
    assert err.value.code == errors.PAYLOAD_INVARIANT


# -- five-stage happy path ------------------------------------------------------------


def test_full_happy_path(builder):
    seed_roles(builder)
    state = builder.chain.state

    pr = builder.submit(payloads.PR_SUBMIT, "erin", {"lines": [CHAIR, DESK]})
    state = builder.chain.state
    assert state.prs[pr.tx_id].status == "Submitted"
    assert state.prs[pr.tx_id].requester == "erin"

    builder.submit(payloads.PR_OPEN_CANVASS, "cass", {"pr_ref": pr.tx_id})
    assert builder.chain.state.prs[pr.tx_id].status == "UnderCanvass"

    aoc = builder.submit(
        payloads.AOC_SUBMIT,
        "cass",
        {"pr_ref": pr.tx_id, "quotes": quotes((100, 50), (90, 40), (95, 60)), "winner_index": 1},
    )
    po = builder.submit(payloads.PO_ISSUE, "cass", {"aoc_ref": aoc.tx_id})
    state = builder.chain.state
    assert state.prs[pr.tx_id].status == "Ordered"
    assert state.pos[po.tx_id].status == "Open"
    assert state.pos[po.tx_id].supplier == "s1"
    # PO lines = PR lines priced at the winning quote.
    assert [(l.description, l.quantity, l.unit_price) for l in state.pos[po.tx_id].lines] == [
        ("office chair", 4, 90),
        ("desk", 2, 40),
    ]

    dc = builder.submit(
        payloads.DELIVERY_RECORD,
        "carl",
        {"po_ref": po.tx_id, "lines": [{"received": 4, "remarks": ""}, {"received": 2, "remarks": ""}]},
    )
    assert builder.chain.state.pos[po.tx_id].status == "Delivered"

    builder.submit(
        payloads.INSPECTION_RECORD,
        "ines",
        {"dc_ref": dc.tx_id, "verdicts": [{"passed": 1, "reason": ""}, {"passed": 1, "reason": ""}]},
    )
    assert builder.chain.state.pos[po.tx_id].inspection_passed

    builder.submit(payloads.PO_CLOSE, "carl", {"po_ref": po.tx_id})
    state = builder.chain.state
    assert state.pos[po.tx_id].status == "Closed"
    assert state.prs[pr.tx_id].status == "Closed"


def test_failed_inspection_allows_redelivery(builder):
    seed_roles(builder)
    pr = builder.submit(payloads.PR_SUBMIT, "erin", {"lines": [CHAIR]})
    builder.submit(payloads.PR_OPEN_CANVASS, "cass", {"pr_ref": pr.tx_id})
    aoc = builder.submit(
        payloads.AOC_SUBMIT,
        "cass",
        {"pr_ref": pr.tx_id, "quotes": quotes((100,), (90,), (95,)), "winner_index": 1},
    )
    po = builder.submit(payloads.PO_ISSUE, "cass", {"aoc_ref": aoc.tx_id})
    dc1 = builder.submit(
        payloads.DELIVERY_RECORD, "carl",
        {"po_ref": po.tx_id, "lines": [{"received": 3, "remarks": "one short"}]},
    )
    builder.submit(
        payloads.INSPECTION_RECORD, "ines",
        {"dc_ref": dc1.tx_id, "verdicts": [{"passed": 0, "reason": "incomplete"}]},
    )
    state = builder.chain.state
    assert state.pos[po.tx_id].status == "Delivered"
    assert not state.pos[po.tx_id].inspection_passed

    # PO not closable until a delivery passes inspection.
    expect_tx_error(builder, errors.INVALID_TRANSITION, payloads.PO_CLOSE, "carl", {"po_ref": po.tx_id})

    dc2 = builder.submit(
        payloads.DELIVERY_RECORD, "carl",
        {"po_ref": po.tx_id, "lines": [{"received": 4, "remarks": "complete"}]},
    )
    builder.submit(
        payloads.INSPECTION_RECORD, "ines",
        {"dc_ref": dc2.tx_id, "verdicts": [{"passed": 1, "reason": ""}]},
    )
    builder.submit(payloads.PO_CLOSE, "carl", {"po_ref": po.tx_id})
    assert builder.chain.state.pos[po.tx_id].status == "Closed"


# -- rejected branches ------------------------------------------------------------------


@pytest.fixture
def staged(builder):
    """Builder with roles seeded and one PR in Submitted."""
    seed_roles(builder)
    pr = builder.submit(payloads.PR_SUBMIT, "erin", {"lines": [CHAIR]})
    return builder, pr


def test_wrong_roles_rejected(staged):
    builder, pr = staged
    expect_tx_error(builder, errors.ROLE_FORBIDDEN, payloads.PR_SUBMIT, "cass", {"lines": [CHAIR]})
    expect_tx_error(builder, errors.ROLE_FORBIDDEN, payloads.PR_OPEN_CANVASS, "erin", {"pr_ref": pr.tx_id})
    expect_tx_error(builder, errors.ROLE_FORBIDDEN, payloads.PR_REJECT, "cass", {"pr_ref": pr.tx_id})


def test_unknown_and_inactive_authors(staged):
    builder, pr = staged
    expect_tx_error(builder, errors.UNKNOWN_AUTHOR, payloads.PR_SUBMIT, "ghost", {"lines": [CHAIR]})
    builder.submit(payloads.ADMIN_DEACTIVATE_USER, "admin", {"user_id": "erin"})
    expect_tx_error(builder, errors.INACTIVE_AUTHOR, payloads.PR_SUBMIT, "erin", {"lines": [CHAIR]})


def test_unknown_references(staged):
    builder, pr = staged
    bogus = bytes(64)
    expect_tx_error(builder, errors.UNKNOWN_REFERENCE, payloads.PR_OPEN_CANVASS, "cass", {"pr_ref": bogus})
    expect_tx_error(builder, errors.UNKNOWN_REFERENCE, payloads.PO_ISSUE, "cass", {"aoc_ref": bogus})
    expect_tx_error(
        builder, errors.UNKNOWN_REFERENCE, payloads.INSPECTION_RECORD, "ines",
        {"dc_ref": bogus, "verdicts": [{"passed": 1, "reason": ""}]},
    )


def test_canvass_rules(staged):
    builder, pr = staged
    q3 = quotes((100,), (90,), (95,))
    # AoC before canvass opens.
    expect_tx_error(
        builder, errors.INVALID_TRANSITION, payloads.AOC_SUBMIT, "cass",
        {"pr_ref": pr.tx_id, "quotes": q3, "winner_index": 1},
    )
    builder.submit(payloads.PR_OPEN_CANVASS, "cass", {"pr_ref": pr.tx_id})
    # Too few quotes (min_quotes defaults to 3).
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.AOC_SUBMIT, "cass",
        {"pr_ref": pr.tx_id, "quotes": quotes((100,), (90,)), "winner_index": 1},
    )
    # Claimed winner disagrees with the award rule.
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.AOC_SUBMIT, "cass",
        {"pr_ref": pr.tx_id, "quotes": q3, "winner_index": 0},
    )
    # Quote not pricing every line.
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.AOC_SUBMIT, "cass",
        {"pr_ref": pr.tx_id, "quotes": quotes((100,), (90, 1), (95,)), "winner_index": 1},
    )
    aoc = builder.submit(
        payloads.AOC_SUBMIT, "cass", {"pr_ref": pr.tx_id, "quotes": q3, "winner_index": 1}
    )
    # One abstract per request.
    expect_tx_error(
        builder, errors.INVALID_TRANSITION, payloads.AOC_SUBMIT, "cass",
        {"pr_ref": pr.tx_id, "quotes": q3, "winner_index": 1},
    )


def test_delivery_and_inspection_rules(staged):
    builder, pr = staged
    builder.submit(payloads.PR_OPEN_CANVASS, "cass", {"pr_ref": pr.tx_id})
    aoc = builder.submit(
        payloads.AOC_SUBMIT, "cass",
        {"pr_ref": pr.tx_id, "quotes": quotes((100,), (90,), (95,)), "winner_index": 1},
    )
    po = builder.submit(payloads.PO_ISSUE, "cass", {"aoc_ref": aoc.tx_id})
    # Received may not exceed ordered.
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.DELIVERY_RECORD, "carl",
        {"po_ref": po.tx_id, "lines": [{"received": 5, "remarks": ""}]},
    )
    # Line count must match the order.
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.DELIVERY_RECORD, "carl",
        {"po_ref": po.tx_id, "lines": [{"received": 1, "remarks": ""}, {"received": 1, "remarks": ""}]},
    )
    dc = builder.submit(
        payloads.DELIVERY_RECORD, "carl",
        {"po_ref": po.tx_id, "lines": [{"received": 4, "remarks": ""}]},
    )
    # Fail verdict requires a reason; verdict count must match.
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.INSPECTION_RECORD, "ines",
        {"dc_ref": dc.tx_id, "verdicts": [{"passed": 0, "reason": ""}]},
    )
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.INSPECTION_RECORD, "ines",
        {"dc_ref": dc.tx_id, "verdicts": []},
    )
    builder.submit(
        payloads.INSPECTION_RECORD, "ines",
        {"dc_ref": dc.tx_id, "verdicts": [{"passed": 1, "reason": ""}]},
    )
    # One report per checklist.
    expect_tx_error(
        builder, errors.INVALID_TRANSITION, payloads.INSPECTION_RECORD, "ines",
        {"dc_ref": dc.tx_id, "verdicts": [{"passed": 1, "reason": ""}]},
    )


def test_reject_only_before_ordering(staged):
    builder, pr = staged
    builder.submit(payloads.PR_REJECT, "admin", {"pr_ref": pr.tx_id})
    assert builder.chain.state.prs[pr.tx_id].status == "Rejected"
    # Terminal: nothing else may touch it.
    expect_tx_error(builder, errors.INVALID_TRANSITION, payloads.PR_OPEN_CANVASS, "cass", {"pr_ref": pr.tx_id})
    expect_tx_error(builder, errors.INVALID_TRANSITION, payloads.PR_REJECT, "admin", {"pr_ref": pr.tx_id})


def test_submit_pr_payload_invariants(staged):
    builder, _ = staged
    expect_tx_error(builder, errors.PAYLOAD_INVARIANT, payloads.PR_SUBMIT, "erin", {"lines": []})
    bad = dict(CHAIR, quantity=0)
    expect_tx_error(builder, errors.PAYLOAD_INVARIANT, payloads.PR_SUBMIT, "erin", {"lines": [bad]})


def test_error_leaves_state_untouched(staged):
    builder, pr = staged
    before = builder.chain.state.fingerprint()
    tx = builder.tx(payloads.PR_OPEN_CANVASS, "erin", {"pr_ref": pr.tx_id})
    with pytest.raises(errors.TxError):
        apply_tx(builder.chain.state, tx)
    assert builder.chain.state.fingerprint() == before


def test_duplicate_tx_rejected(staged):
    builder, pr = staged
    state = builder.chain.state
    with pytest.raises(errors.TxError) as err:
        apply_tx(state, pr)  # already committed
    assert err.value.code == errors.DUPLICATE_TRANSACTION


# -- administration -------------------------------------------------------------------


def test_admin_user_management(builder):
    builder.add_user("erin", ["employee"])
    expect_tx_error(
        builder, errors.DUPLICATE_USER, payloads.ADMIN_ADD_USER, "admin",
        {"user_id": "erin", "display_name": "again", "roles": ["employee"]},
    )
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.ADMIN_ADD_USER, "admin",
        {"user_id": "pat", "display_name": "Pat", "roles": []},
    )
    expect_tx_error(
        builder, errors.PAYLOAD_INVARIANT, payloads.ADMIN_ADD_USER, "admin",
        {"user_id": "pat", "display_name": "Pat", "roles": ["wizard"]},
    )
    expect_tx_error(
        builder, errors.UNKNOWN_USER, payloads.ADMIN_DEACTIVATE_USER, "admin", {"user_id": "ghost"}
    )
    # Only administrators may manage users once the chain is live.
    expect_tx_error(
        builder, errors.ROLE_FORBIDDEN, payloads.ADMIN_ADD_USER, "erin",
        {"user_id": "pat", "display_name": "Pat", "roles": ["employee"]},
    )


def test_validator_set_management(builder):
    assert builder.chain.state.validators == ["v1", "v2", "v3"]
    builder.submit(payloads.ADMIN_ADD_VALIDATOR, "admin", {"validator_id": "v4"})
    assert builder.chain.state.validators == ["v1", "v2", "v3", "v4"]
    expect_tx_error(
        builder, errors.DUPLICATE_VALIDATOR, payloads.ADMIN_ADD_VALIDATOR, "admin",
        {"validator_id": "v4"},
    )
    builder.submit(payloads.ADMIN_REMOVE_VALIDATOR, "admin", {"validator_id": "v4"})
    expect_tx_error(
        builder, errors.UNKNOWN_VALIDATOR, payloads.ADMIN_REMOVE_VALIDATOR, "admin",
        {"validator_id": "v9"},
    )


def test_cannot_remove_last_validator():
    from tests.conftest import ChainBuilder

    solo = ChainBuilder(validators=["v1"])
    tx = solo.tx(payloads.ADMIN_REMOVE_VALIDATOR, "admin", {"validator_id": "v1"})
    with pytest.raises(errors.TxError) as err:
        apply_tx(solo.chain.state, tx)
    assert err.value.code == errors.CANNOT_REMOVE_LAST_VALIDATOR
