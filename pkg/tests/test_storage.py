"""Append-only block log: framing, strict load, and torn-tail recovery."""

import pytest

from pams.errors import CorruptLog
from pams.storage import LOG_MAGIC, BlockLog, log_bytes


@pytest.fixture
def chain3(builder):
    builder.add_user("erin", ["employee"])
    builder.add_user("cass", ["canvasser"])
    return builder.chain.blocks


def test_write_and_load_round_trip(tmp_path, chain3):
    log = BlockLog(tmp_path / "blocks.log")
    assert not log.exists()
    log.write_all(chain3)
    assert log.exists()
    assert log.load() == chain3
    assert (tmp_path / "blocks.log").read_bytes() == log_bytes(chain3)


def test_append_matches_write_all(tmp_path, chain3):
    a = BlockLog(tmp_path / "a.log")
    a.create()
    for block in chain3:
        a.append(block)
    b = BlockLog(tmp_path / "b.log")
    b.write_all(chain3)
    assert (tmp_path / "a.log").read_bytes() == (tmp_path / "b.log").read_bytes()


def test_load_rejects_bad_magic(tmp_path, chain3):
    path = tmp_path / "blocks.log"
    BlockLog(path).write_all(chain3)
    data = path.read_bytes()
    path.write_bytes(b"WRONGMAG" + data[len(LOG_MAGIC):])
    with pytest.raises(CorruptLog):
        BlockLog(path).load()


def test_load_rejects_torn_tail_but_recover_drops_it(tmp_path, chain3):
    path = tmp_path / "blocks.log"
    BlockLog(path).write_all(chain3)
    data = path.read_bytes()
    path.write_bytes(data[:-7])  # cut mid-frame

    with pytest.raises(CorruptLog) as err:
        BlockLog(path).load()
    assert err.value.height == len(chain3) - 1

    blocks, dropped = BlockLog(path).recover()
    assert blocks == chain3[:-1]
    assert dropped > 0
    # The file was truncated to the good prefix and now loads strictly.
    assert BlockLog(path).load() == chain3[:-1]


def test_recover_drops_partial_length_prefix(tmp_path, chain3):
    path = tmp_path / "blocks.log"
    BlockLog(path).write_all(chain3)
    path.write_bytes(path.read_bytes() + b"\x00\x00\x01")  # 3 bytes of a length field
    blocks, dropped = BlockLog(path).recover()
    assert blocks == chain3
    assert dropped == 3


def test_undecodable_frame_fails_even_in_recovery(tmp_path, chain3):
    path = tmp_path / "blocks.log"
    BlockLog(path).write_all(chain3)
    data = path.read_bytes()
    first_len = int.from_bytes(data[len(LOG_MAGIC):len(LOG_MAGIC) + 8], "big")
    cut = len(LOG_MAGIC) + 8 + first_len
    junk = (5).to_bytes(8, "big") + b"\xff" * 5  # complete frame, not a block
    path.write_bytes(data[:cut] + junk + data[cut:])
    with pytest.raises(CorruptLog) as err:
        BlockLog(path).load()
    assert err.value.height == 1
    with pytest.raises(CorruptLog):
        BlockLog(path).recover()


def test_frame_height_must_match_position(tmp_path, chain3):
    path = tmp_path / "blocks.log"
    BlockLog(path).write_all([chain3[0], chain3[2]])  # skipped height 1
    with pytest.raises(CorruptLog) as err:
        BlockLog(path).load()
    assert err.value.height == 1
