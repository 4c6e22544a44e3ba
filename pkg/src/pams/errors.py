"""Error taxonomy shared by transaction validation, block append, and the node.

Transaction and block failures carry a stable machine-readable ``code`` so the
API, CLI, and tests can match on it without parsing prose.
"""

from __future__ import annotations


class PamsError(Exception):
    """Base for all package errors."""


class TxError(PamsError):
    """A transaction failed validation; the state is unchanged."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


class BlockError(PamsError):
    """A block failed verification; the chain is unchanged."""

    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {detail}" if detail else code)


class ConfigError(PamsError):
    pass


class CorruptLog(PamsError):
    def __init__(self, height: int, detail: str = ""):
        self.height = height
        self.detail = detail
        super().__init__(f"corrupt block log at height {height}: {detail}")


# Transaction validation codes.
UNKNOWN_AUTHOR = "UnknownAuthor"
INACTIVE_AUTHOR = "InactiveAuthor"
ROLE_FORBIDDEN = "RoleForbidden"
UNKNOWN_REFERENCE = "UnknownReference"
INVALID_TRANSITION = "InvalidTransition"
PAYLOAD_INVARIANT = "PayloadInvariantViolated"
DUPLICATE_TRANSACTION = "DuplicateTransaction"
INSPECTION_NOT_PASSED = "InspectionNotPassed"
DUPLICATE_ASSET_UID = "DuplicateAssetUid"
WRONG_ASSET_STATUS = "WrongAssetStatus"
UNKNOWN_USER = "UnknownUser"
SELF_TRANSFER = "SelfTransfer"
DUPLICATE_USER = "DuplicateUser"
DUPLICATE_VALIDATOR = "DuplicateValidator"
UNKNOWN_VALIDATOR = "UnknownValidator"
CANNOT_REMOVE_LAST_VALIDATOR = "CannotRemoveLastValidator"

# Block verification codes.
HEIGHT_MISMATCH = "HeightMismatch"
PREV_HASH_MISMATCH = "PrevHashMismatch"
BAD_BLOCK_HASH = "BadBlockHash"
BAD_TX_DIGEST = "BadTxDigest"
QUORUM_NOT_MET = "QuorumNotMet"
BAD_CERTIFICATE = "BadCertificate"
INVALID_TRANSACTION = "InvalidTransaction"
