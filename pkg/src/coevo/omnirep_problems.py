"""The four representation/encoding couplings evolved by OMNIREP.

* bit count: a 120-bit string read through a 4-field bit allocation,
  fitted to cubic regression data;
* precision: 50 real coefficients read through 50 decimal-digit counts,
  fitted to a 50-term power sum;
* program: a 10-line program of generic opcodes ``f1..f5`` read through an
  instruction map into a fixed pool of unary functions;
* blocks: a list of pixel start indexes read through (length, colour) pairs.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .evo_core import ContractError, Genome, GenomeTemplate
from .omnirep import OmnirepProblem

__all__ = [
    "decode_bitcount",
    "eval_cubic",
    "repair_allocation",
    "BitCountProblem",
    "decode_precision",
    "eval_poly50",
    "PrecisionProblem",
    "INSTRUCTIONS",
    "INSTRUCTION_NAMES",
    "run_program",
    "run_program_many",
    "eval_program",
    "ProgramProblem",
    "render_blocks",
    "image_error",
    "BlocksProblem",
    "pack_rgb",
    "unpack_rgb",
    "read_ppm",
    "write_ppm",
    "default_target",
]


def _values(g):
    return g.values if isinstance(g, Genome) else np.asarray(g)


# ---------------------------------------------------------------- bit count

def _bits_to_int(bits: np.ndarray) -> int:
    n = len(bits)
    packed = np.packbits(bits.astype(np.uint8)).tobytes()
    return int.from_bytes(packed, "big") >> (8 * len(packed) - n)


def decode_bitcount(bits, alloc, coeff_range: float = 10.0, total_bits: int | None = None) -> list[float]:
    """Read the fields of ``alloc`` from ``bits`` (MSB first, starting at bit 0).

    A field of ``n`` bits holding unsigned value ``u`` decodes to
    ``(u - 2**(n-1)) / 2**(n-1) * coeff_range``, so results lie in
    ``[-coeff_range, coeff_range)``. Bits past the last field are ignored.
    """
    b = np.asarray(_values(bits), dtype=bool)
    widths = [int(w) for w in _values(alloc)]
    total = len(b) if total_bits is None else total_bits
    if any(w < 2 for w in widths) or sum(widths) > total or len(b) < sum(widths):
        raise ContractError(f"invalid bit allocation {widths} for {total} bits")
    return _decode_fields(_bits_to_int(b), len(b), widths, coeff_range)


def _decode_fields(word: int, nbits: int, widths: list[int], coeff_range: float) -> list[float]:
    out = []
    pos = 0
    for w in widths:
        u = (word >> (nbits - pos - w)) & ((1 << w) - 1)
        half = 1 << (w - 1)
        out.append((u - half) / half * coeff_range)
        pos += w
    return out


def eval_cubic(coeffs, dataset) -> float:
    """Mean squared error of ``a x^3 + b x^2 + c x + d`` over ``(x, y)`` rows."""
    rows = dataset.tolist() if isinstance(dataset, np.ndarray) else list(dataset)
    if not rows:
        raise ContractError("dataset is empty")
    a, b, c, d = (float(v) for v in coeffs)
    total = 0.0
    for x, y in rows:
        r = ((a * x + b) * x + c) * x + d - y
        total += r * r
    return total / len(rows)


def repair_allocation(alloc, total_bits: int = 120, min_bits: int = 2) -> np.ndarray:
    """Force every field to >= ``min_bits`` and the sum to <= ``total_bits``.

    Oversized allocations are first scaled down proportionally (floor), then
    the largest field (lowest index on ties) loses one bit at a time until the
    sum fits.
    """
    a = np.maximum(np.asarray(alloc, dtype=np.int64), min_bits)
    if min_bits * len(a) > total_bits:
        raise ContractError("total_bits too small for the number of fields")
    s = int(a.sum())
    if s > total_bits:
        a = np.maximum(a * total_bits // s, min_bits)
        while int(a.sum()) > total_bits:
            a[int(np.argmax(a))] -= 1
    return a


class BitCountProblem(OmnirepProblem):
    """Cubic regression: bit-string representation, bit-allocation encoding."""

    def __init__(self, dataset, total_bits: int = 120, coeff_range: float = 10.0, target=None, max_field_bits: int | None = None):
        self.dataset = np.asarray(dataset, dtype=float).reshape(-1, 2)
        self.total_bits = int(total_bits)
        self.coeff_range = float(coeff_range)
        self.target = None if target is None else tuple(float(t) for t in target)
        self.rep_template = GenomeTemplate("bits", self.total_bits)
        self.enc_template = GenomeTemplate("int", 4, 2, max_field_bits or self.total_bits // 4)
        self._rows = self.dataset.tolist()
        self._words: dict[bytes, int] = {}

    @classmethod
    def random(cls, rng, n_points=20, x_range=(-1.0, 1.0), coeff_low=-5.0, coeff_high=5.0, **kw):
        target = rng.uniform(coeff_low, coeff_high, 4)
        x = np.linspace(x_range[0], x_range[1], n_points)
        a, b, c, d = target
        y = ((a * x + b) * x + c) * x + d
        return cls(np.column_stack([x, y]), target=target, **kw)

    def decode(self, rep: Genome, enc: Genome) -> list[float]:
        return decode_bitcount(rep, enc, self.coeff_range, self.total_bits)

    def eval(self, rep: Genome, enc: Genome) -> float:
        widths = enc.values.tolist()
        if min(widths) < 2 or sum(widths) > self.total_bits:
            raise ContractError(f"invalid bit allocation {widths} for {self.total_bits} bits")
        word = self._words.get(rep.key())
        if word is None:
            word = self._words[rep.key()] = _bits_to_int(rep.values)
            if len(self._words) > 100_000:
                self._words.clear()
        return eval_cubic(_decode_fields(word, len(rep), widths, self.coeff_range), self._rows)

    def repair_encoding(self, g: Genome) -> Genome:
        fixed = repair_allocation(g.values, self.total_bits)
        return g if np.array_equal(fixed, g.values) else g.with_values(fixed)

    def encoding_size(self, g: Genome) -> float:
        return float(g.values.sum())


# ---------------------------------------------------------------- precision

def decode_precision(coeffs, digits) -> np.ndarray:
    """Round each coefficient half away from zero to its own number of decimals."""
    x = np.asarray(_values(coeffs), dtype=float)
    d = np.asarray(_values(digits), dtype=np.int64)
    scale = 10.0 ** d
    return np.sign(x) * np.floor(np.abs(x) * scale + 0.5) / scale


class PrecisionProblem(OmnirepProblem):
    """Power-sum regression ``y = sum_j a_j x**e_j``: reals read at evolved precision."""

    def __init__(self, exponents, dataset, max_digits: int = 8, coefficients=None):
        self.exponents = np.asarray(exponents, dtype=np.int64)
        self.dataset = np.asarray(dataset, dtype=float).reshape(-1, 2)
        self.coefficients = None if coefficients is None else np.asarray(coefficients, dtype=float)
        n = len(self.exponents)
        self._powers = self.dataset[:, :1] ** self.exponents[None, :]
        self.rep_template = GenomeTemplate("real", n, 0.0, 1.0)
        self.enc_template = GenomeTemplate("int", n, 1, max_digits)

    @classmethod
    def random(cls, rng, n_terms=50, n_points=20, max_exponent=4, **kw):
        e = rng.integers(0, max_exponent, size=n_terms, endpoint=True)
        a = rng.random(n_terms)
        x = np.linspace(0.0, 1.0, n_points)
        y = ((x[:, None] ** e[None, :]) * a[None, :]).sum(axis=1)
        return cls(e, np.column_stack([x, y]), coefficients=a, **kw)

    def predict(self, coeffs) -> np.ndarray:
        return (self._powers * np.asarray(coeffs, dtype=float)[None, :]).sum(axis=1)

    def eval(self, rep: Genome, enc: Genome) -> float:
        return eval_poly50(decode_precision(rep, enc), self)

    def encoding_size(self, g: Genome) -> float:
        return float(g.values.sum())


def eval_poly50(coeffs, problem: PrecisionProblem) -> float:
    """MSE of the power sum with ``coeffs`` against the problem's data."""
    r = problem.predict(_values(coeffs)) - problem.dataset[:, 1]
    return float(np.mean(r * r))


# ---------------------------------------------------------------- programs

INSTRUCTIONS = {
    "add1": lambda x: x + 1.0,
    "minus2": lambda x: x - 2.0,
    "mul10": lambda x: x * 10.0,
    "div2": lambda x: x / 2.0,
    "neg": np.negative,
    "fabs": np.fabs,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "square": np.square,
    "sqrt_abs": lambda x: np.sqrt(np.fabs(x)),
    "id": lambda x: x,
}
INSTRUCTION_NAMES = tuple(INSTRUCTIONS)

CLAMP = 1e6


def _resolve_pool(pool):
    if pool is None:
        pool = INSTRUCTION_NAMES
    return [INSTRUCTIONS[f] if isinstance(f, str) else f for f in pool]


def run_program_many(opcodes, imap, pool, inputs, clamp: float = CLAMP) -> np.ndarray:
    """Run the program once per input value (vectorized over inputs).

    Line ``x = f_i(x)`` applies ``pool[imap[i - 1]]``. After every line the
    value is clamped to ``[-clamp, clamp]`` and NaN becomes 0.
    """
    funcs = _resolve_pool(pool)
    ops = [int(o) for o in _values(opcodes)]
    table = [int(i) for i in _values(imap)]
    x = np.array(inputs, dtype=float, ndmin=1)
    with np.errstate(all="ignore"):
        for op in ops:
            x = np.asarray(funcs[table[op - 1]](x), dtype=float)
            x = np.clip(x, -clamp, clamp)
            x[np.isnan(x)] = 0.0
    return x


def run_program(opcodes, imap, pool, v: float, clamp: float = CLAMP) -> float:
    return float(run_program_many(opcodes, imap, pool, [v], clamp)[0])


def eval_program(opcodes, imap, problem: "ProgramProblem") -> float:
    """Sum over the problem inputs of |candidate output - target output|."""
    out = run_program_many(opcodes, imap, problem.pool, problem.inputs, problem.clamp)
    return math.fsum(np.abs(out - problem.target_outputs).tolist())


class ProgramProblem(OmnirepProblem):
    """Emulate a hidden 10-line target program over a fixed input set."""

    def __init__(self, target_opcodes, target_imap, inputs, pool=None, clamp: float = CLAMP, n_generic: int = 5):
        self.pool_names = tuple(INSTRUCTION_NAMES if pool is None else pool)
        self.pool = _resolve_pool(self.pool_names)
        self.target_opcodes = np.asarray(target_opcodes, dtype=np.int64)
        self.target_imap = np.asarray(target_imap, dtype=np.int64)
        self.inputs = np.asarray(inputs, dtype=float)
        self.clamp = float(clamp)
        self.target_outputs = run_program_many(self.target_opcodes, self.target_imap, self.pool, self.inputs, self.clamp)
        self.rep_template = GenomeTemplate("int", len(self.target_opcodes), 1, n_generic)
        self.enc_template = GenomeTemplate("int", n_generic, 0, len(self.pool) - 1)

    @classmethod
    def random(cls, rng, n_lines=10, n_generic=5, n_inputs=10, input_range=(-2.0, 2.0), pool=None, **kw):
        size = len(INSTRUCTION_NAMES if pool is None else pool)
        ops = rng.integers(1, n_generic, size=n_lines, endpoint=True)
        imap = rng.integers(0, size - 1, size=n_generic, endpoint=True)
        inputs = np.linspace(input_range[0], input_range[1], n_inputs)
        return cls(ops, imap, inputs, pool=pool, n_generic=n_generic, **kw)

    def eval(self, rep: Genome, enc: Genome) -> float:
        return eval_program(rep, enc, self)

    def listing(self, opcodes, imap) -> str:
        """Human-readable program next to its instruction meanings."""
        lines = ["x=v"] + [f"x=f{int(o)}(x)" for o in _values(opcodes)]
        meanings = [f"f{i + 1}: {self.pool_names[int(j)]}" for i, j in enumerate(_values(imap))]
        width = max(len(s) for s in lines)
        rows = [f"{a:<{width}}  {b}" for a, b in zip(lines, meanings + [""] * len(lines))]
        return "\n".join(r.rstrip() for r in rows)


# ---------------------------------------------------------------- images

def pack_rgb(rgb) -> int:
    r, g, b = (int(c) for c in rgb)
    return (r << 16) | (g << 8) | b


def unpack_rgb(packed) -> np.ndarray:
    p = np.asarray(packed, dtype=np.int64)
    return np.stack([(p >> 16) & 255, (p >> 8) & 255, p & 255], axis=-1).astype(np.uint8)


def render_blocks(starts, blocks, canvas: tuple[int, int], base_color) -> np.ndarray:
    """Paint same-colour runs onto a row-major canvas of ``(width, height)``.

    Block ``i`` covers flat pixels ``[starts[i], starts[i] + length_i)``,
    truncated at the last pixel. Later blocks overwrite earlier ones and
    uncovered pixels keep ``base_color``. ``blocks`` rows are
    ``(length, packed_rgb)``. Returns an ``(height, width, 3)`` uint8 image.
    """
    w, h = canvas
    n = w * h
    s = np.asarray(_values(starts), dtype=np.int64)
    bl = np.asarray(_values(blocks), dtype=np.int64).reshape(-1, 2)
    if len(s) != len(bl):
        raise ContractError("starts and blocks must have equal length")
    flat = np.empty((n, 3), dtype=np.uint8)
    flat[:] = np.asarray(base_color, dtype=np.uint8)
    if len(s):
        pix = np.arange(n)
        cover = (pix[None, :] >= s[:, None]) & (pix[None, :] < (s + bl[:, 0])[:, None])
        # index of the last block covering each pixel
        last = len(s) - 1 - np.argmax(cover[::-1], axis=0)
        hit = cover.any(axis=0)
        flat[hit] = unpack_rgb(bl[last[hit], 1])
    return flat.reshape(h, w, 3)


def image_error(img, target) -> int:
    """Sum of squared per-channel differences."""
    a = np.asarray(img)
    b = np.asarray(target)
    if a.shape != b.shape:
        raise ContractError(f"image shapes differ: {a.shape} vs {b.shape}")
    d = a.astype(np.int64) - b.astype(np.int64)
    return int((d * d).sum())


class BlocksProblem(OmnirepProblem):
    """Approximate a target image with coloured runs of pixels."""

    def __init__(self, target, n_blocks: int = 32, max_block_length: int | None = None, base_color=None):
        self.target = np.asarray(target, dtype=np.uint8)
        if self.target.ndim != 3 or self.target.shape[2] != 3:
            raise ContractError("target must be an (height, width, 3) RGB image")
        h, w, _ = self.target.shape
        self.canvas = (w, h)
        if base_color is None:
            base_color = np.round(self.target.reshape(-1, 3).mean(axis=0))
        self.base_color = np.asarray(base_color, dtype=np.uint8)
        self.n_blocks = int(n_blocks)
        self.max_block_length = int(max_block_length or w)
        self.rep_template = GenomeTemplate("int", self.n_blocks, 0, w * h - 1)
        self.enc_template = GenomeTemplate("pairs", self.n_blocks, [1, 0], [self.max_block_length, 0xFFFFFF])

    def render(self, rep: Genome, enc: Genome) -> np.ndarray:
        return render_blocks(rep, enc, self.canvas, self.base_color)

    def eval(self, rep: Genome, enc: Genome) -> float:
        return float(image_error(self.render(rep, enc), self.target))


def default_target(width: int = 16, height: int = 16) -> np.ndarray:
    """Deterministic test card: colour bands with a square and a diagonal."""
    img = np.zeros((height, width, 3), dtype=np.uint8)
    bands = [(200, 40, 40), (240, 200, 60), (50, 140, 70), (40, 80, 190)]
    for y in range(height):
        img[y, :] = bands[min(y * len(bands) // height, len(bands) - 1)]
    y0, x0 = height // 4, width // 4
    img[y0 : y0 + height // 2, x0 : x0 + width // 2] = (245, 245, 245)
    for i in range(min(width, height)):
        img[i, i] = (20, 20, 20)
    return img


def write_ppm(path, img) -> None:
    """Binary PPM (P6, maxval 255)."""
    a = np.asarray(img, dtype=np.uint8)
    h, w, _ = a.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(a.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PPM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PPM is supported (maxval {maxval})")
    pos += 1  # single whitespace after maxval
    body = data[pos : pos + w * h * 3]
    if len(body) != w * h * 3:
        raise ValueError(f"{path}: expected {w * h * 3} pixel bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy()
