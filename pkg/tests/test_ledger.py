"""Tests for the hash-chained shuffle ledger."""

import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudotwin.ledger import (
    Chain,
    EpochRegression,
    ShuffleTransaction,
    ZERO_DIGEST,
    commit,
    deserialize_transaction,
    serialize_transaction,
)


def txn(epoch=0.0, rsu=0, kind="vmu", n=3, tag=b"x"):
    return ShuffleTransaction(
        epoch=epoch,
        rsu_id=rsu,
        pool_kind=kind,
        commitments=tuple(commit(tag + bytes([i])) for i in range(n)),
        permutation_seed_commitment=commit(tag + b"seed"),
    )


def build_chain(n_blocks: int) -> Chain:
    chain = Chain()
    for i in range(n_blocks):
        chain.append(txn(epoch=float(i), rsu=i % 4, kind="vmu" if i % 2 else "vt", n=1 + i % 5, tag=bytes([i])))
    return chain


class TestTransaction:
    def test_duplicate_commitments_rejected(self):
        c = commit(b"same")
        with pytest.raises(ValueError):
            ShuffleTransaction(
                epoch=0.0,
                rsu_id=0,
                pool_kind="vmu",
                commitments=(c, c),
                permutation_seed_commitment=commit(b"s"),
            )

    def test_bad_pool_kind(self):
        with pytest.raises(ValueError):
            txn(kind="other")

    def test_short_digest_rejected(self):
        with pytest.raises(ValueError):
            ShuffleTransaction(
                epoch=0.0,
                rsu_id=0,
                pool_kind="vmu",
                commitments=(b"short",),
                permutation_seed_commitment=commit(b"s"),
            )

    def test_serialization_roundtrip(self):
        for t in (txn(), txn(epoch=3.25, rsu=17, kind="vt", n=0), txn(n=7)):
            assert deserialize_transaction(serialize_transaction(t)) == t

    def test_serialization_injective(self):
        a, b = txn(tag=b"a"), txn(tag=b"b")
        assert serialize_transaction(a) != serialize_transaction(b)
        assert serialize_transaction(txn(epoch=1.0)) != serialize_transaction(
            txn(epoch=2.0)
        )

    def test_malformed_bytes_rejected(self):
        data = serialize_transaction(txn())
        with pytest.raises(ValueError):
            deserialize_transaction(data[:-1])
        with pytest.raises(ValueError):
            deserialize_transaction(data + b"\x00")


class TestChain:
    def test_genesis_prev_is_zero(self):
        chain = Chain().append(txn())
        assert len(chain) == 1
        assert chain.blocks[0].prev_hash == ZERO_DIGEST

    def test_linkage(self):
        chain = Chain().append(txn(epoch=0.0)).append(txn(epoch=1.0, tag=b"y"))
        assert chain.blocks[1].prev_hash == chain.blocks[0].block_hash

    def test_epoch_regression_rejected(self):
        chain = Chain().append(txn(epoch=5.0))
        with pytest.raises(EpochRegression):
            chain.append(txn(epoch=4.0, tag=b"y"))
        assert len(chain) == 1

    def test_equal_epoch_allowed(self):
        chain = Chain().append(txn(epoch=5.0)).append(txn(epoch=5.0, tag=b"y"))
        assert chain.verify() is None

    def test_block_hash_definition(self):
        chain = build_chain(3)
        b = chain.blocks[2]
        expect = hashlib.sha256(
            serialize_transaction(b.transaction) + b.prev_hash
        ).digest()
        assert b.block_hash == expect


class TestVerify:
    def test_empty_ok(self):
        assert Chain().verify() is None

    def test_untampered_100_blocks(self):
        assert build_chain(100).verify() is None

    def test_verify_after_append_composes(self):
        chain = build_chain(10)
        assert chain.verify() is None
        chain.append(txn(epoch=100.0, tag=b"z"))
        assert chain.verify() is None

    def test_tampered_transaction_detected_at_index(self):
        chain = build_chain(100)
        tampered = chain.blocks[42].transaction
        object.__setattr__(tampered, "epoch", tampered.epoch + 1e-9)
        assert chain.verify() == 42

    def test_tampered_prev_hash_detected(self):
        chain = build_chain(50)
        b = chain.blocks[10]
        object.__setattr__(b, "prev_hash", bytes(32))
        assert chain.verify() == 10

    def test_single_bit_corruptions(self):
        # every single-bit flip of the serialized chain is caught at or
        # before the corrupted block
        chain = build_chain(100)
        data = bytearray(chain.to_bytes())
        ranges = chain.block_byte_ranges()
        rng = np.random.Generator(np.random.PCG64(17))
        start = ranges[0][0]
        for _ in range(300):
            byte_idx = int(rng.integers(start, len(data)))
            bit = int(rng.integers(0, 8))
            corrupted = bytearray(data)
            corrupted[byte_idx] ^= 1 << bit
            block_idx = next(i for i, (a, b) in enumerate(ranges) if a <= byte_idx < b)
            try:
                bad = Chain.from_bytes(bytes(corrupted))
            except ValueError:
                continue  # framing broken: detected at parse time
            first_bad = bad.verify()
            assert first_bad is not None
            assert first_bad <= block_idx


@st.composite
def transactions(draw):
    n = draw(st.integers(0, 6))
    tags = draw(
        st.lists(st.binary(min_size=1, max_size=8), min_size=n, max_size=n, unique=True)
    )
    return ShuffleTransaction(
        epoch=draw(st.floats(0.0, 1e6, allow_nan=False)),
        rsu_id=draw(st.integers(0, 2**32 - 1)),
        pool_kind=draw(st.sampled_from(["vmu", "vt"])),
        commitments=tuple(commit(t) for t in tags),
        permutation_seed_commitment=commit(draw(st.binary(min_size=1, max_size=8))),
    )


class TestSerializationProperties:
    @given(transactions())
    @settings(max_examples=200)
    def test_roundtrip_is_identity(self, t):
        assert deserialize_transaction(serialize_transaction(t)) == t

    @given(transactions(), transactions())
    @settings(max_examples=200)
    def test_injective(self, a, b):
        if a != b:
            assert serialize_transaction(a) != serialize_transaction(b)


class TestExport:
    def test_roundtrip(self):
        chain = build_chain(20)
        again = Chain.from_bytes(chain.to_bytes())
        assert again.verify() is None
        assert len(again) == 20
        assert again.blocks[-1].block_hash == chain.blocks[-1].block_hash

    def test_bad_magic(self):
        with pytest.raises(ValueError):
            Chain.from_bytes(b"NOTCHAIN" + bytes(4))

    def test_digest_lines(self):
        chain = build_chain(3)
        lines = chain.digest_lines()
        assert len(lines) == 3
        assert lines[0].startswith("0 ")
        assert chain.blocks[0].block_hash.hex() in lines[0]
