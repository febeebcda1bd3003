"""Keystream generators and CNF encoders for A5/1- and Bivium-style ciphers.

Both ciphers are modeled exactly as state-recovery problems: the instance
starts from the registers' initial contents (no key schedule or warm-up
phase) and the CNF's satisfying assignments, restricted to the state
variables, are precisely the states producing the given keystream.

Register cells are indexed 0..len-1 with cell 0 the feedback entry and cell
len-1 the output end; a shift moves cell j to j+1.  State variables are
numbered continuously across registers (1..state_bits), followed by one
variable per keystream bit, then encoder auxiliaries.  The reference
generators are plain bit-twiddling implementations kept deliberately
separate from the symbolic encoders so round-trip tests cross-check the two.

A5/1 parameters follow the published description of the generator: register
lengths 19/22/23, feedback taps {13,16,17,18} / {20,21} / {7,20,21,22},
clocking taps 8/10/10, majority clocking, output = XOR of the three output
cells after clocking.  Bivium keeps the first two Trivium registers (93 and
84 cells) with output s66+s93+s162+s177 and the standard feedback.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .cnf import CnfFormula
from .decomposition import DecompositionSet

A51_DEFAULT_KEYSTREAM = 144
A51_GSM_BURST = 114
BIVIUM_DEFAULT_KEYSTREAM = 200

_A51_LENGTHS = (19, 22, 23)
_A51_TAPS = ((13, 16, 17, 18), (20, 21), (7, 20, 21, 22))
_A51_CLOCK_TAPS = (8, 10, 10)

_BIVIUM_LENGTHS = (93, 84)
_BIVIUM_FILTER_TAPS = (65, 68)   # s66 and s162 in 1-based whole-state numbering
_BIVIUM_CROSS_TAPS = (68, 77)    # s69 read by t2; s171 read by t1


@dataclass(frozen=True)
class LfsrSpec:
    length: int
    taps: tuple[int, ...]
    clock_tap: int

    def __post_init__(self):
        if self.length < 2:
            raise ValueError("register length must be >= 2")
        if not self.taps or any(not 0 <= t < self.length for t in self.taps):
            raise ValueError("feedback taps out of range")
        if not 0 <= self.clock_tap < self.length:
            raise ValueError("clock tap out of range")


@dataclass(frozen=True)
class A51Spec:
    name: str
    registers: tuple[LfsrSpec, LfsrSpec, LfsrSpec]
    keystream_len: int

    family = "a5_1"

    @property
    def state_bits(self) -> int:
        return sum(reg.length for reg in self.registers)

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "name": self.name,
            "keystream_len": self.keystream_len,
            "state_bits": self.state_bits,
            "registers": [
                {"length": reg.length, "taps": list(reg.taps),
                 "clock_tap": reg.clock_tap}
                for reg in self.registers
            ],
        }


@dataclass(frozen=True)
class BiviumRegister:
    length: int
    filter_tap: int            # early cell entering feedback and output
    cross_tap: int             # cell read by the other register's feedback

    def __post_init__(self):
        if self.length < 3:
            raise ValueError("register length must be >= 3")
        for tap in (self.filter_tap, self.cross_tap):
            if not 0 <= tap < self.length:
                raise ValueError("tap out of range")

    @property
    def and_taps(self) -> tuple[int, int]:
        return (self.length - 3, self.length - 2)


@dataclass(frozen=True)
class BiviumSpec:
    name: str
    registers: tuple[BiviumRegister, BiviumRegister]
    keystream_len: int

    family = "bivium"

    @property
    def state_bits(self) -> int:
        return sum(reg.length for reg in self.registers)

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "name": self.name,
            "keystream_len": self.keystream_len,
            "state_bits": self.state_bits,
            "registers": [
                {"length": reg.length, "filter_tap": reg.filter_tap,
                 "and_taps": list(reg.and_taps), "cross_tap": reg.cross_tap}
                for reg in self.registers
            ],
        }


GeneratorSpec = Union[A51Spec, BiviumSpec]


def a5_1(keystream_len: int = A51_DEFAULT_KEYSTREAM) -> A51Spec:
    return make_weakened("a5_1", _A51_LENGTHS, keystream_len)


def bivium(keystream_len: int = BIVIUM_DEFAULT_KEYSTREAM) -> BiviumSpec:
    return make_weakened("bivium", _BIVIUM_LENGTHS, keystream_len)


def _scale_tap(tap: int, old_len: int, new_len: int) -> int:
    # Proportional position scaling; exact at full size.  Python's
    # round-half-even keeps this deterministic everywhere.
    return round(tap * (new_len - 1) / (old_len - 1))


def make_weakened(family: str, register_lengths: Sequence[int],
                  keystream_len: int) -> GeneratorSpec:
    """Build a structurally faithful variant with the given register sizes.

    Published sizes reproduce the standard generators exactly; smaller sizes
    scale every tap position proportionally (feedback taps deduplicated
    after rounding).  The concrete positions land in the instance metadata.
    """
    if keystream_len < 1:
        raise ValueError("keystream length must be >= 1")
    lengths = tuple(int(l) for l in register_lengths)
    if family == "a5_1":
        if len(lengths) != 3:
            raise ValueError("A5/1 takes three register lengths")
        registers = []
        for length, full, taps, clock in zip(
                lengths, _A51_LENGTHS, _A51_TAPS, _A51_CLOCK_TAPS):
            scaled = tuple(sorted({_scale_tap(t, full, length) for t in taps}))
            registers.append(LfsrSpec(length, scaled,
                                      _scale_tap(clock, full, length)))
        name = "a5_1" if lengths == _A51_LENGTHS else \
            "a5_1-mini-" + "-".join(str(l) for l in lengths)
        return A51Spec(name, tuple(registers), keystream_len)
    if family == "bivium":
        if len(lengths) != 2:
            raise ValueError("Bivium takes two register lengths")
        registers = []
        for length, full, filt, cross in zip(
                lengths, _BIVIUM_LENGTHS, _BIVIUM_FILTER_TAPS, _BIVIUM_CROSS_TAPS):
            registers.append(BiviumRegister(
                length, _scale_tap(filt, full, length),
                _scale_tap(cross, full, length)))
        name = "bivium" if lengths == _BIVIUM_LENGTHS else \
            "bivium-mini-" + "-".join(str(l) for l in lengths)
        return BiviumSpec(name, tuple(registers), keystream_len)
    raise ValueError(f"unknown generator family {family!r}")


# -- reference generators ----------------------------------------------------

def reference_keystream(spec: GeneratorSpec, state: Sequence[int],
                        nbits: Optional[int] = None) -> tuple[int, ...]:
    """Produce the keystream for an initial state; pure bit arithmetic."""
    if len(state) != spec.state_bits:
        raise ValueError(
            f"state must have {spec.state_bits} bits, got {len(state)}")
    bits = [int(b) & 1 for b in state]
    n = spec.keystream_len if nbits is None else nbits
    if isinstance(spec, A51Spec):
        return _a51_keystream(spec, bits, n)
    return _bivium_keystream(spec, bits, n)


def _a51_keystream(spec: A51Spec, state: list[int], nbits: int) -> tuple[int, ...]:
    regs = []
    pos = 0
    for reg in spec.registers:
        regs.append(state[pos:pos + reg.length])
        pos += reg.length
    out = []
    for _ in range(nbits):
        clocks = [regs[i][spec.registers[i].clock_tap] for i in range(3)]
        majority = 1 if clocks[0] + clocks[1] + clocks[2] >= 2 else 0
        for i, reg in enumerate(spec.registers):
            if clocks[i] == majority:
                feedback = 0
                for tap in reg.taps:
                    feedback ^= regs[i][tap]
                regs[i] = [feedback] + regs[i][:-1]
        out.append(regs[0][-1] ^ regs[1][-1] ^ regs[2][-1])
    return tuple(out)


def _bivium_keystream(spec: BiviumSpec, state: list[int], nbits: int) -> tuple[int, ...]:
    spec1, spec2 = spec.registers
    r1 = state[:spec1.length]
    r2 = state[spec1.length:]
    a1, b1 = spec1.and_taps
    a2, b2 = spec2.and_taps
    out = []
    for _ in range(nbits):
        out.append(r1[spec1.filter_tap] ^ r1[-1] ^ r2[spec2.filter_tap] ^ r2[-1])
        t1 = r1[spec1.filter_tap] ^ (r1[a1] & r1[b1]) ^ r1[-1] ^ r2[spec2.cross_tap]
        t2 = r2[spec2.filter_tap] ^ (r2[a2] & r2[b2]) ^ r2[-1] ^ r1[spec1.cross_tap]
        r1 = [t2] + r1[:-1]
        r2 = [t1] + r2[:-1]
    return tuple(out)


def random_state(spec: GeneratorSpec, seed: int) -> tuple[int, ...]:
    rng = random.Random(seed)
    return tuple(rng.getrandbits(1) for _ in range(spec.state_bits))


# -- CNF encoders -------------------------------------------------------------

class _GateCnfBuilder:
    """Fresh-variable Tseitin emission of the gate library used here."""

    def __init__(self, num_reserved: int):
        self.next_var = num_reserved + 1
        self.clauses: list[list[int]] = []

    def new_var(self) -> int:
        var = self.next_var
        self.next_var += 1
        return var

    def xor_into(self, y: int, a: int, b: int) -> int:
        self.clauses += [[-a, -b, -y], [a, b, -y], [-a, b, y], [a, -b, y]]
        return y

    def xor(self, a: int, b: int) -> int:
        return self.xor_into(self.new_var(), a, b)

    def xor_chain(self, lits: Sequence[int], out: Optional[int] = None) -> int:
        acc = lits[0]
        for lit in lits[1:-1] if out is not None else lits[1:]:
            acc = self.xor(acc, lit)
        if out is not None:
            if len(lits) == 1:
                # Degenerate chain: out must equal the single input.
                self.clauses += [[-lits[0], out], [lits[0], -out]]
                return out
            return self.xor_into(out, acc, lits[-1])
        return acc

    def and2(self, a: int, b: int) -> int:
        y = self.new_var()
        self.clauses += [[-a, -b, y], [a, -y], [b, -y]]
        return y

    def xnor(self, a: int, b: int) -> int:
        y = self.new_var()
        self.clauses += [[-a, -b, y], [a, b, y], [-a, b, -y], [a, -b, -y]]
        return y

    def majority3(self, a: int, b: int, c: int) -> int:
        y = self.new_var()
        self.clauses += [[-a, -b, y], [-a, -c, y], [-b, -c, y],
                         [a, b, -y], [a, c, -y], [b, c, -y]]
        return y

    def mux(self, sel: int, if_true: int, if_false: int) -> int:
        y = self.new_var()
        self.clauses += [[-sel, -if_true, y], [-sel, if_true, -y],
                         [sel, -if_false, y], [sel, if_false, -y]]
        return y

    def unit(self, var: int, value: int) -> None:
        self.clauses.append([var] if value else [-var])


@dataclass(frozen=True)
class CryptoInstance:
    """A cipher state-recovery SAT instance plus its variable map."""

    spec: GeneratorSpec
    cnf: CnfFormula
    state_vars: DecompositionSet
    keystream: tuple[int, ...]
    keystream_vars: tuple[int, ...]
    secret_state: Optional[tuple[int, ...]] = None

    def state_assignment(self, state: Sequence[int]) -> dict[int, bool]:
        if len(state) != self.spec.state_bits:
            raise ValueError("state length mismatch")
        return {var: bool(bit)
                for var, bit in zip(self.state_vars.variables, state)}

    def keystream_of_model(self, model: dict[int, bool]) -> tuple[int, ...]:
        return tuple(int(model[v]) for v in self.keystream_vars)

    def state_of_model(self, model: dict[int, bool]) -> tuple[int, ...]:
        return tuple(int(model[v]) for v in self.state_vars.variables)

    def metadata(self) -> dict:
        return {
            "generator": self.spec.to_json_dict(),
            "state_vars": list(self.state_vars.variables),
            "keystream_vars": list(self.keystream_vars),
            "keystream": "".join(str(b) for b in self.keystream),
            "num_vars": self.cnf.num_vars,
            "num_clauses": self.cnf.num_clauses,
        }


def encode(spec: GeneratorSpec, keystream: Sequence[int],
           secret_state: Optional[Sequence[int]] = None) -> CryptoInstance:
    """Encode state recovery from a known keystream as CNF.

    One fresh auxiliary variable per gate output per clocked step; keystream
    variables are constrained by unit clauses.  The state variables form a
    strong unit-propagation backdoor by construction (substituting any full
    state lets propagation walk the whole gate cascade).
    """
    if len(keystream) != spec.keystream_len:
        raise ValueError(
            f"keystream must have {spec.keystream_len} bits, got {len(keystream)}")
    bits = tuple(int(b) & 1 for b in keystream)
    state_bits = spec.state_bits
    keystream_vars = tuple(range(state_bits + 1, state_bits + len(bits) + 1))
    builder = _GateCnfBuilder(state_bits + len(bits))
    if isinstance(spec, A51Spec):
        _encode_a51(spec, builder, keystream_vars)
    else:
        _encode_bivium(spec, builder, keystream_vars)
    for var, bit in zip(keystream_vars, bits):
        builder.unit(var, bit)
    cnf = CnfFormula(builder.next_var - 1, builder.clauses)
    return CryptoInstance(
        spec=spec,
        cnf=cnf,
        state_vars=DecompositionSet.of(range(1, state_bits + 1)),
        keystream=bits,
        keystream_vars=keystream_vars,
        secret_state=tuple(int(b) & 1 for b in secret_state) if secret_state else None,
    )


def _encode_a51(spec: A51Spec, builder: _GateCnfBuilder,
                keystream_vars: tuple[int, ...]) -> None:
    regs: list[list[int]] = []
    pos = 1
    for reg in spec.registers:
        regs.append(list(range(pos, pos + reg.length)))
        pos += reg.length
    for out_var in keystream_vars:
        clock_vars = [regs[i][spec.registers[i].clock_tap] for i in range(3)]
        majority = builder.majority3(*clock_vars)
        for i, reg in enumerate(spec.registers):
            moves = builder.xnor(clock_vars[i], majority)
            feedback = builder.xor_chain([regs[i][t] for t in reg.taps]) \
                if len(reg.taps) > 1 else regs[i][reg.taps[0]]
            cells = regs[i]
            new_cells = [builder.mux(moves, feedback, cells[0])]
            for j in range(1, reg.length):
                new_cells.append(builder.mux(moves, cells[j - 1], cells[j]))
            regs[i] = new_cells
        builder.xor_chain([regs[0][-1], regs[1][-1], regs[2][-1]], out=out_var)


def _encode_bivium(spec: BiviumSpec, builder: _GateCnfBuilder,
                   keystream_vars: tuple[int, ...]) -> None:
    spec1, spec2 = spec.registers
    r1 = list(range(1, spec1.length + 1))
    r2 = list(range(spec1.length + 1, spec1.length + spec2.length + 1))
    for out_var in keystream_vars:
        builder.xor_chain(
            [r1[spec1.filter_tap], r1[-1], r2[spec2.filter_tap], r2[-1]],
            out=out_var)
        a1, b1 = spec1.and_taps
        and1 = builder.and2(r1[a1], r1[b1])
        t1 = builder.xor_chain(
            [r1[spec1.filter_tap], and1, r1[-1], r2[spec2.cross_tap]])
        a2, b2 = spec2.and_taps
        and2 = builder.and2(r2[a2], r2[b2])
        t2 = builder.xor_chain(
            [r2[spec2.filter_tap], and2, r2[-1], r1[spec1.cross_tap]])
        r1 = [t2] + r1[:-1]
        r2 = [t1] + r2[:-1]
