"""Independent reference values for the C++ crypto tests.

Uses hashlib, cryptography and PyNaCl rather than the project's code, so the
vectors frozen into tests/test_crypto.cpp and tests/test_wire.cpp are a
cross-check, not a replay.
Run: python3 tests/oracle/crypto_vectors.py
"""
import base64
import hashlib
import struct

import nacl.bindings as nb
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms
from cryptography.hazmat.primitives import serialization


def rng_bytes(seed, stream, n):
    key = hashlib.blake2b(b"autokey/rng/v1" + seed.to_bytes(8, "little") + stream.encode(),
                          digest_size=32).digest()
    out = b""
    counter = 0
    while len(out) < n:
        nonce = counter.to_bytes(8, "little") + b"\0" * 4
        enc = Cipher(algorithms.ChaCha20(key, b"\0" * 4 + nonce), mode=None).encryptor()
        out += enc.update(b"\0" * 64)
        counter += 1
    return out[:n]


def lp(b):
    return struct.pack(">I", len(b)) + b


def canonical_cert(subject, pk, start, end):
    return b"AKC1" + lp(subject.encode()) + lp(pk) + struct.pack(">qq", start, end)


def armor(canon):
    fp = hashlib.blake2b(canon, digest_size=20).digest()
    body = base64.b64encode(canon + fp).decode()
    lines = [body[i:i + 64] for i in range(0, len(body), 64)]
    return fp.hex(), "-----BEGIN CERTIFICATE-----\n" + "\n".join(lines) + "\n-----END CERTIFICATE-----\n"


def s2k(passphrase, salt=b""):
    return hashlib.blake2b(b"autokey/s2k/v1\0" + passphrase.encode(), key=salt, digest_size=32).digest()


def main():
    print("rng(42,'test')[0:40] =", rng_bytes(42, "test", 40).hex())
    print("rng(42,'test') bytes 64..80 =", rng_bytes(42, "test", 80)[64:80].hex())

    seed = bytes(range(32))
    sk = Ed25519PrivateKey.from_private_bytes(seed)
    pk = sk.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    print("ed25519 pk(seed 00..1f) =", pk.hex())
    msg = b"autokey signature vector"
    print("signature =", sk.sign(msg).hex())

    canon = canonical_cert("alice@example.org", pk, 0, 86400)
    fp, arm = armor(canon)
    print("fingerprint =", fp)
    print("armor =", repr(arm))

    print("s2k('correct horse battery staple') =", s2k("correct horse battery staple").hex())
    print("s2k(pass, salt 00..0f) =", s2k("correct horse battery staple", bytes(range(16))).hex())

    rpk = nb.crypto_sign_ed25519_pk_to_curve25519(pk)
    epk, esk = nb.crypto_box_seed_keypair(b"\x42" * 32)
    nonce = hashlib.blake2b(epk + rpk, digest_size=24).digest()
    pt = b"meet me at the usual place"
    ct = nb.crypto_box(pt, nonce, rpk, esk)
    print("box ciphertext =", (epk + ct).hex())

    key = s2k("correct horse battery staple")
    snonce = bytes(range(24))
    sct = nb.crypto_secretbox(b"opaque document body", snonce, key)
    print("secretbox ciphertext =", (snonce + sct).hex())

    # Postcard m1 from a@x to b@y at t=60, subject "Hi", body "Hello".
    msg = (b"AKM1" + bytes([7, 3]) + lp(b"m1") + lp(b"a@x") + lp(b"b@y") + struct.pack(">q", 60)
           + lp(b"Hi") + lp(b"Hello") + struct.pack(">I", 0) + b"\0")
    print("postcard encoding =", msg.hex())
    # Same with a one-byte armored-certificate-free opaque attachment and signature 0xAA*64.
    signed = (b"AKM1" + bytes([1, 1]) + lp(b"m2") + lp(b"a@x") + lp(b"b@y") + struct.pack(">q", -5)
              + lp(b"s") + lp(b"b") + struct.pack(">I", 1) + bytes([2]) + lp(b"\x01\x02"))
    print("signed region =", (signed + b"\0").hex())
    print("signed encoding =", (signed + b"\1" + lp(b"\xaa" * 64)).hex())


if __name__ == "__main__":
    main()
