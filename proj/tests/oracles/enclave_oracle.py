#!/usr/bin/env python3
# Copyright 2026 The sgxio-sim Authors
# SPDX-License-Identifier: Apache-2.0
"""Standalone recomputation of measurement, report MAC, key derivation and
key transport values. Uses only hashlib and the `cryptography` package, so it
shares no code with the C++ implementation. Prints the frozen values used by
enclave_test.cc and attestation_test.cc."""

import hashlib

from cryptography.hazmat.primitives.cmac import CMAC
from cryptography.hazmat.primitives.ciphers import algorithms


def sha256(b: bytes) -> bytes:
    return hashlib.sha256(b).digest()


def cmac(key: bytes, msg: bytes) -> bytes:
    c = CMAC(algorithms.AES(key))
    c.update(msg)
    return c.finalize()


def measure(pages, debug: bool) -> bytes:
    m = sha256(b"\x01" if debug else b"\x00")
    for p in pages:
        m = sha256(m + p)
    return m


def derive(secret: bytes, label: bytes, ident: bytes) -> bytes:
    return sha256(secret + label + ident)[:16]


def main():
    secret = bytes(range(32))
    enclave_e = measure([b"user-app code", b"user-app data"], False)
    enclave_t = measure([b"driver code"], False)
    data = bytes([0xA5] * 32)
    print("measure_empty_production", measure([], False).hex())
    print("measure_E", enclave_e.hex())
    print("measure_T", enclave_t.hex())
    print("measure_T_debug", measure([b"driver code"], True).hex())
    rk_t = derive(secret, b"report", enclave_t)
    print("report_key_T", rk_t.hex())
    print("seal_key_E", derive(secret, b"seal", enclave_e).hex())
    print("report_mac_E_to_T", cmac(rk_t, enclave_e + data).hex())
    nonce = bytes(range(0x40, 0x60))
    print("transport_key_E_to_T", cmac(rk_t, enclave_e + nonce).hex())


if __name__ == "__main__":
    main()
