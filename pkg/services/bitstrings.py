"""Bitstrings as '0'/'1' strings.

Indexing follows the usual convention for these constructions: the index is itself a
bitstring read as a binary number, and position 0 is the leftmost bit, so
bit_at("0100", "01") == "1".
"""
from __future__ import annotations

from itertools import product
from typing import Iterator, Optional, Sequence

from .errors import DomainExplosion, DomainMismatch, PreconditionViolated

Bitstring = str

MAX_ENUMERATED_WIDTH = 20


def exp2_tower(n: int, k: int, cap: Optional[int] = None) -> int:
    """exp^0(k) = k, exp^n(k) = 2 ** exp^(n-1)(k).

    With a cap, raises DomainExplosion as soon as a level exceeds it.
    """
    value = k
    for _ in range(n):
        if cap is not None and value > cap:
            break
        value = 2 ** value
    if cap is not None and value > cap:
        raise DomainExplosion(f"exp^{n}({k}) bits exceed the cap of {cap}; try a smaller k")
    return value


def is_bitstring(value: object) -> bool:
    return isinstance(value, str) and all(c in "01" for c in value)


def bit_at(u: Bitstring, index: Bitstring) -> Bitstring:
    position = int(index, 2) if index else 0
    if position >= len(u):
        raise DomainMismatch(f"Index {index!r} out of range for a {len(u)}-bit string")
    return u[position]


def all_bitstrings(width: int) -> Iterator[Bitstring]:
    if width > MAX_ENUMERATED_WIDTH:
        raise DomainExplosion(f"Refusing to enumerate {width}-bit strings")
    for bits in product("01", repeat=width):
        yield "".join(bits)


def flip(bit: Bitstring) -> Bitstring:
    return "1" if bit == "0" else "0"


def _check_chain(w: Sequence[Bitstring]) -> int:
    """Validate w = <w_0 (k bits), w_1, ..., w_J (single bits)> and return k."""
    if not w:
        raise DomainMismatch("Empty bitstring chain")
    if not all(is_bitstring(x) for x in w):
        raise DomainMismatch(f"Not a bitstring chain: {list(w)}")
    k = len(w[0])
    if k == 0:
        raise DomainMismatch("w_0 must have at least one bit")
    if any(len(x) != 1 for x in w[1:]):
        raise DomainMismatch("w_1..w_J must be single bits")
    return k


def _check_fork(u: Bitstring, level: int, k: int) -> None:
    width = exp2_tower(level, k)
    if not is_bitstring(u) or len(u) != width:
        raise DomainMismatch(f"u_{level} must have {width} bits, got {u!r}")


def consistent(w: Sequence[Bitstring], u: Sequence[Bitstring]) -> bool:
    """w_0 = u_0 and w_n = u_n[u_{n-1}] for every n >= 1."""
    k = _check_chain(w)
    if len(u) != len(w):
        raise DomainMismatch(f"Chains differ in length: {len(w)} vs {len(u)}")
    for level, x in enumerate(u):
        _check_fork(x, level, k)
    if w[0] != u[0]:
        return False
    return all(w[n] == bit_at(u[n], u[n - 1]) for n in range(1, len(w)))


def compatible(w: Sequence[Bitstring], u_last: Bitstring) -> bool:
    """Is there any u_0..u_{J-1} that makes w consistent with (u_0, ..., u_{J-1}, u_last)?

    Works level by level with the set of fork values that can still carry the chain.
    """
    k = _check_chain(w)
    last = len(w) - 1
    _check_fork(u_last, last, k)
    if last == 0:
        return w[0] == u_last
    carriers = {w[0]}
    for level in range(1, last):
        positions = {int(s, 2) for s in carriers}
        carriers = {
            u for u in all_bitstrings(exp2_tower(level, k))
            if any(u[p] == w[level] for p in positions)
        }
    return any(bit_at(u_last, s) == w[last] for s in carriers)


def compatible_by_search(w: Sequence[Bitstring], u_last: Bitstring) -> bool:
    """Definition-level check: try every prefix u_0..u_{J-1}."""
    k = _check_chain(w)
    last = len(w) - 1
    _check_fork(u_last, last, k)
    levels = [list(all_bitstrings(exp2_tower(level, k))) for level in range(last)]
    return any(consistent(w, list(prefix) + [u_last]) for prefix in product(*levels))


def _encryption_step(previous: Bitstring, level: int, k: int, w_bit: Bitstring, wbar_bit: Bitstring) -> Bitstring:
    width = exp2_tower(level, k)
    entries = [flip(wbar_bit)] * width
    entries[int(previous, 2)] = w_bit
    return "".join(entries)


def _first_difference(w: Sequence[Bitstring], wbar: Sequence[Bitstring]) -> int:
    k = _check_chain(w)
    if _check_chain(wbar) != k or len(wbar) != len(w):
        raise DomainMismatch("w and wbar must have the same shape")
    for i, (a, b) in enumerate(zip(w, wbar)):
        if a != b:
            return i
    raise PreconditionViolated("w and wbar are identical")


def encrypt_forks(w: Sequence[Bitstring], wbar: Sequence[Bitstring]) -> list[Bitstring]:
    """Forks u_0..u_J with w consistent and wbar incompatible, for chains that differ at w_0."""
    if _first_difference(w, wbar) != 0:
        raise PreconditionViolated("encrypt_forks needs w_0 != wbar_0")
    k = len(w[0])
    u = [w[0]]
    for level in range(1, len(w)):
        u.append(_encryption_step(u[-1], level, k, w[level], wbar[level]))
    return u


def adversarial_forks(
    w: Sequence[Bitstring],
    wbar: Sequence[Bitstring],
    u_prefix: Sequence[Bitstring],
) -> list[Bitstring]:
    """Complete u_0..u_{J'-1} (J' = first index where w and wbar differ) with u_{J'}..u_J.

    The result keeps w consistent with the full chain while wbar becomes incompatible
    with u_J: u_{J'} repeats w_{J'} so no entry can carry wbar_{J'}, and every later
    level only carries w_j at the position selected by the level below.
    """
    split = _first_difference(w, wbar)
    k = len(w[0])
    if len(u_prefix) != split:
        raise PreconditionViolated(f"Expected {split} prefix forks, got {len(u_prefix)}")
    for level, x in enumerate(u_prefix):
        _check_fork(x, level, k)
    if split >= 1 and u_prefix[0] != w[0]:
        raise PreconditionViolated("u_0 must equal w_0")
    for level in range(1, split):
        if bit_at(u_prefix[level], u_prefix[level - 1]) != w[level]:
            raise PreconditionViolated(f"u_{level} does not carry w_{level}")

    if split == 0:
        out = [w[0]]
    else:
        out = [w[split] * exp2_tower(split, k)]
    chain = list(u_prefix) + out
    for level in range(split + 1, len(w)):
        step = _encryption_step(chain[-1], level, k, w[level], wbar[level])
        chain.append(step)
        out.append(step)
    return out
