"""Append-only hash chain over pseudonym shuffle transactions.

A single writer (the scenario's certificate authority) appends one block
per shuffle epoch; anyone can re-verify the whole chain. Pseudonym ids
enter the chain only as hash commitments, never raw.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

HASH_ALGORITHM = "sha-256"
DIGEST_SIZE = 32
ZERO_DIGEST = bytes(DIGEST_SIZE)

_MAGIC = b"PTCHAIN1"

_POOL_CODES = {"vmu": 0, "vt": 1}
_POOL_NAMES = {v: k for k, v in _POOL_CODES.items()}


class EpochRegression(ValueError):
    """Appended transaction is older than the chain tip."""


def commit(data: bytes) -> bytes:
    """256-bit commitment to an opaque byte string."""
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class ShuffleTransaction:
    """One return-and-shuffle epoch at one RSU pool."""

    epoch: float
    rsu_id: int
    pool_kind: str
    commitments: tuple[bytes, ...]
    permutation_seed_commitment: bytes

    def __post_init__(self) -> None:
        if self.pool_kind not in _POOL_CODES:
            raise ValueError(f"pool_kind must be 'vmu' or 'vt', got {self.pool_kind!r}")
        if not 0 <= self.rsu_id < 2**32:
            raise ValueError(f"rsu_id out of range: {self.rsu_id}")
        if len(set(self.commitments)) != len(self.commitments):
            raise ValueError("commitments must be pairwise distinct")
        for c in (*self.commitments, self.permutation_seed_commitment):
            if len(c) != DIGEST_SIZE:
                raise ValueError("commitments must be 32-byte digests")


def serialize_transaction(txn: ShuffleTransaction) -> bytes:
    """Canonical encoding: fixed field order, big-endian integers, raw digests."""
    out = bytearray()
    out += struct.pack(">d", txn.epoch)
    out += struct.pack(">I", txn.rsu_id)
    out += bytes([_POOL_CODES[txn.pool_kind]])
    out += struct.pack(">I", len(txn.commitments))
    for c in txn.commitments:
        out += c
    out += txn.permutation_seed_commitment
    return bytes(out)


def deserialize_transaction(data: bytes) -> ShuffleTransaction:
    """Inverse of ``serialize_transaction``; rejects malformed input."""
    fixed = 8 + 4 + 1 + 4
    if len(data) < fixed + DIGEST_SIZE:
        raise ValueError("transaction truncated")
    epoch = struct.unpack(">d", data[0:8])[0]
    rsu_id = struct.unpack(">I", data[8:12])[0]
    code = data[12]
    if code not in _POOL_NAMES:
        raise ValueError(f"unknown pool code {code}")
    count = struct.unpack(">I", data[13:17])[0]
    want = fixed + (count + 1) * DIGEST_SIZE
    if len(data) != want:
        raise ValueError(f"transaction length {len(data)} != expected {want}")
    commitments = tuple(
        data[fixed + i * DIGEST_SIZE : fixed + (i + 1) * DIGEST_SIZE]
        for i in range(count)
    )
    perm = data[fixed + count * DIGEST_SIZE :]
    return ShuffleTransaction(
        epoch=epoch,
        rsu_id=rsu_id,
        pool_kind=_POOL_NAMES[code],
        commitments=commitments,
        permutation_seed_commitment=perm,
    )


def _block_hash(txn_bytes: bytes, prev_hash: bytes) -> bytes:
    return hashlib.sha256(txn_bytes + prev_hash).digest()


@dataclass(frozen=True)
class Block:
    transaction: ShuffleTransaction
    prev_hash: bytes
    block_hash: bytes


@dataclass
class Chain:
    """Single-writer hash chain; verify is a pure read."""

    blocks: list[Block] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.blocks)

    def append(self, txn: ShuffleTransaction) -> "Chain":
        if self.blocks and txn.epoch < self.blocks[-1].transaction.epoch:
            raise EpochRegression(
                f"epoch {txn.epoch} precedes chain tip "
                f"{self.blocks[-1].transaction.epoch}"
            )
        prev = self.blocks[-1].block_hash if self.blocks else ZERO_DIGEST
        self.blocks.append(
            Block(
                transaction=txn,
                prev_hash=prev,
                block_hash=_block_hash(serialize_transaction(txn), prev),
            )
        )
        return self

    def verify(self) -> int | None:
        """Recompute every hash; None if intact, else the first invalid index."""
        prev = ZERO_DIGEST
        last_epoch = None
        for i, block in enumerate(self.blocks):
            if block.prev_hash != prev:
                return i
            if _block_hash(serialize_transaction(block.transaction), block.prev_hash) != (
                block.block_hash
            ):
                return i
            if last_epoch is not None and block.transaction.epoch < last_epoch:
                return i
            prev = block.block_hash
            last_epoch = block.transaction.epoch
        return None

    def digest_lines(self) -> list[str]:
        """Human-readable listing: index, epoch, block hash hex."""
        return [
            f"{i} {block.transaction.epoch!r} {block.block_hash.hex()}"
            for i, block in enumerate(self.blocks)
        ]

    def to_bytes(self) -> bytes:
        """Length-prefixed binary export of all blocks."""
        out = bytearray(_MAGIC)
        out += struct.pack(">I", len(self.blocks))
        for block in self.blocks:
            txn_bytes = serialize_transaction(block.transaction)
            out += struct.pack(">I", len(txn_bytes))
            out += txn_bytes
            out += block.prev_hash
            out += block.block_hash
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Chain":
        if data[: len(_MAGIC)] != _MAGIC:
            raise ValueError("not a chain export (bad magic)")
        pos = len(_MAGIC)
        (count,) = struct.unpack_from(">I", data, pos)
        pos += 4
        blocks: list[Block] = []
        for _ in range(count):
            if pos + 4 > len(data):
                raise ValueError("chain export truncated")
            (txn_len,) = struct.unpack_from(">I", data, pos)
            pos += 4
            end = pos + txn_len + 2 * DIGEST_SIZE
            if end > len(data):
                raise ValueError("chain export truncated")
            txn = deserialize_transaction(data[pos : pos + txn_len])
            pos += txn_len
            prev_hash = data[pos : pos + DIGEST_SIZE]
            block_hash = data[pos + DIGEST_SIZE : pos + 2 * DIGEST_SIZE]
            pos += 2 * DIGEST_SIZE
            blocks.append(Block(transaction=txn, prev_hash=prev_hash, block_hash=block_hash))
        if pos != len(data):
            raise ValueError("trailing bytes after chain export")
        return cls(blocks=blocks)

    def block_byte_ranges(self) -> list[tuple[int, int]]:
        """Byte span of each block within ``to_bytes()`` output."""
        ranges = []
        pos = len(_MAGIC) + 4
        for block in self.blocks:
            txn_len = len(serialize_transaction(block.transaction))
            end = pos + 4 + txn_len + 2 * DIGEST_SIZE
            ranges.append((pos, end))
            pos = end
        return ranges
