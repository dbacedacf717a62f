"""Three-rotor Enigma (Wehrmacht I / M3 style) with ring settings and plugboard.

Signal path per key press: step rotors, plugboard, rotors right-to-left,
reflector, rotors left-to-right, plugboard.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .ciphers import LETTERS, letter_index, to_indices, to_text


def _perm(wiring: str) -> tuple[int, ...]:
    perm = tuple(letter_index(ch) for ch in wiring)
    if sorted(perm) != list(range(26)):
        raise ValueError(f"wiring is not a permutation of A-Z: {wiring}")
    return perm


@dataclass(frozen=True)
class RotorSpec:
    name: str
    wiring: tuple[int, ...]
    notch: frozenset[int]
    inverse: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if sorted(self.wiring) != list(range(26)):
            raise ValueError(f"rotor {self.name}: wiring is not a bijection")
        inv = [0] * 26
        for i, w in enumerate(self.wiring):
            inv[w] = i
        object.__setattr__(self, "inverse", tuple(inv))

    @classmethod
    def from_strings(cls, name: str, wiring: str, notch: str) -> "RotorSpec":
        return cls(name, _perm(wiring), frozenset(letter_index(ch) for ch in notch))


ROTORS = {
    "I": RotorSpec.from_strings("I", "EKMFLGDQVZNTOWYHXUSPAIBRCJ", "Q"),
    "II": RotorSpec.from_strings("II", "AJDKSIRUXBLHWTMCQGZNPYFVOE", "E"),
    "III": RotorSpec.from_strings("III", "BDFHJLCPRTXVZNYEIWGAKMUSQO", "V"),
    "IV": RotorSpec.from_strings("IV", "ESOVPZJAYQUIRHXLNFTGKDCMWB", "J"),
    "V": RotorSpec.from_strings("V", "VZBRGITYUPSDNHLXAWMJQOFECK", "Z"),
}

REFLECTORS = {
    "A": _perm("EJMZALYXVBWFCRQUONTSPIKHGD"),
    "B": _perm("YRUHQSLDPXNGOKMIEBFZCWVJAT"),
    "C": _perm("FVPJIAOYEDRZXWGCTKUQSBNMHL"),
}


class EnigmaState(NamedTuple):
    """Window positions (left, middle, right) as letter indices."""

    left: int
    middle: int
    right: int


@dataclass(frozen=True)
class EnigmaConfig:
    reflector: tuple[int, ...]
    rotors: tuple[RotorSpec, RotorSpec, RotorSpec]
    rings: tuple[int, int, int] = (1, 1, 1)
    plugboard: tuple[tuple[int, int], ...] = ()
    plug_map: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = self.reflector
        if sorted(r) != list(range(26)):
            raise ValueError("reflector is not a permutation")
        if any(r[i] == i or r[r[i]] != i for i in range(26)):
            raise ValueError("reflector must be a fixed-point-free involution")
        if len(self.rotors) != 3:
            raise ValueError("exactly three rotors required")
        if len(self.rings) != 3 or any(not 1 <= x <= 26 for x in self.rings):
            raise ValueError(f"ring settings must be three integers in 1..26: {self.rings}")
        if len(self.plugboard) > 10:
            raise ValueError("at most 10 plugboard pairs")
        plug = list(range(26))
        used: set[int] = set()
        for a, b in self.plugboard:
            if a == b or a in used or b in used:
                raise ValueError(f"plugboard pairs must be disjoint: {self.plugboard}")
            used.update((a, b))
            plug[a], plug[b] = b, a
        object.__setattr__(self, "plug_map", tuple(plug))

    @classmethod
    def from_spec(cls, wheels: str = "A-I-II-III", rings=(2, 14, 8), plugs: str = "") -> "EnigmaConfig":
        """Build from a wheel string "REFLECTOR-LEFT-MIDDLE-RIGHT" and plug pairs like "AB CD"."""
        parts = wheels.split("-")
        if len(parts) != 4:
            raise ValueError(f"wheel spec must name a reflector and three rotors: {wheels!r}")
        refl, *names = parts
        try:
            reflector = REFLECTORS[refl]
            rotors = tuple(ROTORS[n] for n in names)
        except KeyError as exc:
            raise ValueError(f"unknown wheel {exc.args[0]!r}") from None
        pairs = tuple((letter_index(p[0]), letter_index(p[1])) for p in plugs.split())
        if any(len(p) != 2 for p in plugs.split()):
            raise ValueError(f"plug pairs must be two letters: {plugs!r}")
        return cls(reflector, rotors, tuple(rings), pairs)


DEFAULT_CONFIG = EnigmaConfig.from_spec("A-I-II-III", rings=(2, 14, 8))


def set_key(config: EnigmaConfig, key: str) -> EnigmaState:
    if not isinstance(key, str) or len(key) != 3:
        raise ValueError(f"enigma key must be exactly 3 letters: {key!r}")
    return EnigmaState(*to_indices(key))


def step(state: EnigmaState, config: EnigmaConfig) -> EnigmaState:
    left, middle, right = state
    _, mid_rotor, right_rotor = config.rotors
    mid_at_notch = middle in mid_rotor.notch
    if mid_at_notch:
        left = (left + 1) % 26
    if mid_at_notch or right in right_rotor.notch:
        middle = (middle + 1) % 26
    right = (right + 1) % 26
    return EnigmaState(left, middle, right)


def _through(sym: int, state: EnigmaState, config: EnigmaConfig) -> int:
    offsets = [p - (r - 1) for p, r in zip(state, config.rings)]
    sym = config.plug_map[sym]
    for rotor, off in zip(reversed(config.rotors), reversed(offsets)):
        sym = (rotor.wiring[(sym + off) % 26] - off) % 26
    sym = config.reflector[sym]
    for rotor, off in zip(config.rotors, offsets):
        sym = (rotor.inverse[(sym + off) % 26] - off) % 26
    return config.plug_map[sym]


def encipher_char(state: EnigmaState, config: EnigmaConfig, sym: int) -> tuple[int, EnigmaState]:
    """Press one key: rotors step first, then the letter is enciphered."""
    if not 0 <= sym <= 25:
        raise ValueError(f"letter index out of range: {sym}")
    state = step(state, config)
    return _through(sym, state, config), state


def encipher_message(config: EnigmaConfig, key: str, text: str) -> str:
    state = set_key(config, key)
    out = []
    for sym in to_indices(text):
        c, state = encipher_char(state, config, sym)
        out.append(c)
    return to_text(out)


def format_state(state: EnigmaState) -> str:
    return "".join(LETTERS[p] for p in state)
