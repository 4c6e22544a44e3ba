"""Append-only block log on disk.

Layout: an 8-byte magic, then one frame per block. A frame is an 8-byte
big-endian length followed by that many bytes of canonical block encoding.
Frame order is block order, so frame index equals block height.

Two read modes with different jobs:

* ``load`` is strict and treats any anomaly, including a torn final frame,
  as corruption. Integrity checks and tamper detection use this, because a
  flipped bit in the last frame's length prefix must surface as a failure,
  not be silently dropped.
* ``recover`` is for node startup after a crash: a clean prefix of intact
  frames followed by a torn tail is expected there (the process died mid
  append), so the tail is truncated away and reported. Corruption before
  the tail still raises.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Union

from .codec import DecodeError
from .errors import CorruptLog
from .ledger import Block, decode_block, encode_block

LOG_MAGIC = b"PAMSBLK1"
_LEN_SIZE = 8


def log_bytes(blocks: list[Block]) -> bytes:
    """The exact byte image a log file of these blocks would have."""
    parts = [LOG_MAGIC]
    for block in blocks:
        data = encode_block(block)
        parts.append(len(data).to_bytes(_LEN_SIZE, "big"))
        parts.append(data)
    return b"".join(parts)


class BlockLog:
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def create(self) -> None:
        """Write an empty log, replacing whatever was at the path."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "wb") as fh:
            fh.write(LOG_MAGIC)
            fh.flush()
            os.fsync(fh.fileno())

    def exists(self) -> bool:
        return self.path.exists()

    def append(self, block: Block) -> None:
        data = encode_block(block)
        with open(self.path, "ab") as fh:
            fh.write(len(data).to_bytes(_LEN_SIZE, "big") + data)
            fh.flush()
            os.fsync(fh.fileno())

    def write_all(self, blocks: list[Block]) -> None:
        self.create()
        for block in blocks:
            self.append(block)

    def _read_frames_strict(self, data: bytes) -> list[bytes]:
        if data[: len(LOG_MAGIC)] != LOG_MAGIC:
            raise CorruptLog(None, "bad magic")
        frames = []
        pos = len(LOG_MAGIC)
        while pos < len(data):
            if pos + _LEN_SIZE > len(data):
                raise CorruptLog(len(frames), "truncated length prefix")
            length = int.from_bytes(data[pos : pos + _LEN_SIZE], "big")
            pos += _LEN_SIZE
            if pos + length > len(data):
                raise CorruptLog(len(frames), f"frame claims {length} bytes, {len(data) - pos} remain")
            frames.append(data[pos : pos + length])
            pos += length
        return frames

    def load(self) -> list[Block]:
        """Strict read: raises CorruptLog on any framing or decode anomaly."""
        data = self.path.read_bytes()
        blocks = []
        for height, frame in enumerate(self._read_frames_strict(data)):
            try:
                block = decode_block(frame)
            except (DecodeError, ValueError) as exc:
                raise CorruptLog(height, f"block does not decode: {exc}") from exc
            if block.header.height != height:
                raise CorruptLog(height, f"frame {height} holds block height {block.header.height}")
            blocks.append(block)
        return blocks

    def recover(self) -> tuple[list[Block], int]:
        """Crash-tolerant read: truncates a torn final frame off the file.

        Returns the intact blocks and the number of bytes dropped. A frame
        that is complete but undecodable is still corruption and raises.
        """
        data = self.path.read_bytes()
        if data[: len(LOG_MAGIC)] != LOG_MAGIC:
            raise CorruptLog(None, "bad magic")
        blocks = []
        pos = len(LOG_MAGIC)
        good_end = pos
        while pos < len(data):
            if pos + _LEN_SIZE > len(data):
                break  # torn mid length prefix
            length = int.from_bytes(data[pos : pos + _LEN_SIZE], "big")
            if pos + _LEN_SIZE + length > len(data):
                break  # torn mid body
            frame = data[pos + _LEN_SIZE : pos + _LEN_SIZE + length]
            height = len(blocks)
            try:
                block = decode_block(frame)
            except (DecodeError, ValueError) as exc:
                raise CorruptLog(height, f"block does not decode: {exc}") from exc
            if block.header.height != height:
                raise CorruptLog(height, f"frame {height} holds block height {block.header.height}")
            blocks.append(block)
            pos += _LEN_SIZE + length
            good_end = pos
        dropped = len(data) - good_end
        if dropped:
            with open(self.path, "r+b") as fh:
                fh.truncate(good_end)
                fh.flush()
                os.fsync(fh.fileno())
        return blocks, dropped
