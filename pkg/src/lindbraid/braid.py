"""Eigenvalue braids of the generator over one counting-field period.

Sweeping the counting field k through [0, 2pi] turns the three slowest
eigenvalues of the generator into three continuous strands in the
(k, Re, Im) space.  Because the spectrum is 2pi-periodic as a *set* while
individual strands may land on each other's starting points, the closed-up
strands form a braid on three strings.  This module tracks the strands,
computes the pairwise winding indices, reads off a braid word from the
crossings of the real parts, and matches the word against the five reference
topologies of the model (classes I..V).

Conventions fixed library-wide:

* strands are ranked by decreasing real part (rank 0 decays slowest), so
  generator ``s_i`` crosses the strands at ranks i-1 and i (1-based i);
* a crossing is positive when the strand with the larger imaginary part at
  the crossing moves from the upper rank to the lower one;
* words are compared up to cyclic rotation, free/braid-relation reduction
  (decided through the reduced Burau representation at t = 1/2, faithful for
  three strands) and, against the reference table only, a global inversion
  of all generators, since the absolute over/under orientation is not pinned
  by the reference data.
"""

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DegeneracyError, ResolutionError, TrackingError
from .model import ModelParams, lindbladian

#: number of strands tracked (the slowest-decaying subset)
N_STRANDS = 3

#: Burau evaluation parameter; any value in (0, 1) keeps the representation faithful
BURAU_T = 0.5

#: adaptive refinement: bisect while min inter-strand gap < GAP_FACTOR * step motion
GAP_FACTOR = 10.0
MAX_REFINE_DEPTH = 12

#: reference words for the five topological classes
CLASS_WORDS = {
    "I": (1, 2, 2, 1),
    "II": (2, 2),
    "III": (2,),
    "IV": (2, 1),
    "V": (),
}


@dataclass(frozen=True)
class BandSet:
    """Strands of the tracked eigenvalues over one counting-field period.

    Attributes:
        k_grid: ascending counting-field samples covering [0, 2pi].
        strands: array (len(k_grid), N_STRANDS); column j is a continuous
            eigenvalue curve.
        loop_permutation: tuple p with strand j ending on the k=0 value of
            strand p[j] after the full period.
        band_selection: indices (into the Re-descending order at k=0) of the
            tracked bands.
    """

    k_grid: np.ndarray
    strands: np.ndarray
    loop_permutation: tuple
    band_selection: tuple = (0, 1, 2)


@dataclass(frozen=True)
class BraidClassification:
    """Braid invariants and class assignment for one parameter point."""

    nu_pair: np.ndarray          # nu^(a,b); half-integers for closed pairs
    nu_ab: np.ndarray            # symmetrized nu_{a;b}; NaN where not meaningful
    nu_total: int
    word: tuple                  # signed generator sequence, e.g. (2, 1) = s2 s1
    class_label: str             # one of I..V or "Unknown"


def _spectrum_values(p: ModelParams, k: float) -> np.ndarray:
    """All nine eigenvalues at counting field k (no eigenvectors needed here)."""
    return np.linalg.eigvals(lindbladian(p.with_(k=k)))


def sweep(p: ModelParams, grid_size: int = 512) -> BandSet:
    """Track the three slowest strands over k in [0, 2pi].

    Successive samples are matched by exhaustive minimal-total-distance
    assignment of the current strand values into the full spectrum.  The grid
    is refined by bisection wherever a strand moves by a non-negligible
    fraction of its distance to the nearest other eigenvalue, so the
    assignment (and any crossing it implies) stays unambiguous.

    Raises:
        TrackingError: if refinement bottoms out while the assignment is
            still ambiguous (an exceptional point sits on the sweep path).
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    vals0 = _spectrum_values(p, 0.0)
    current = vals0[np.argsort(-vals0.real, kind="stable")][:N_STRANDS].copy()

    ks = [0.0]
    rows = [current.copy()]
    pending = list(np.linspace(0.0, 2 * np.pi, grid_size + 1)[1:])
    depth = {}
    while pending:
        k_next = pending[0]
        vals = _spectrum_values(p, k_next)
        assign, _ = _best_assignment(current, vals)
        new = vals[list(assign)]
        motion = float(np.max(np.abs(new - current)))
        gap = _isolation(vals, assign)
        d = depth.get(k_next, 0)
        if motion * GAP_FACTOR > gap:
            if d >= MAX_REFINE_DEPTH:
                raise TrackingError(
                    "strand assignment ambiguous after refinement; "
                    f"possible exceptional point in k interval ({ks[-1]:.6f}, {k_next:.6f})",
                    k_interval=(ks[-1], k_next),
                )
            mid = 0.5 * (ks[-1] + k_next)
            depth[mid] = d + 1
            depth[k_next] = d + 1
            pending.insert(0, mid)
            continue
        pending.pop(0)
        ks.append(k_next)
        rows.append(new)
        current = new

    strands = np.array(rows)
    k_grid = np.array(ks)
    perm, resid = _best_assignment(strands[-1], strands[0])
    if resid > 1e-6 * max(1.0, float(np.max(np.abs(strands[0])))):
        raise TrackingError(
            f"strand endpoints do not close onto the k=0 spectrum (residual {resid:.2e})"
        )
    return BandSet(k_grid=k_grid, strands=strands, loop_permutation=tuple(perm))


_PERM_CACHE = {}


def _perm_table(n_sources, n_targets):
    key = (n_sources, n_targets)
    if key not in _PERM_CACHE:
        _PERM_CACHE[key] = np.array(list(permutations(range(n_targets), n_sources)))
    return _PERM_CACHE[key]


def _best_assignment(sources, targets):
    """Minimal-total-distance injection of sources into targets (<= 3 sources)."""
    dist = np.abs(np.asarray(targets)[None, :] - np.asarray(sources)[:, None])
    table = _perm_table(len(sources), len(targets))
    costs = dist[np.arange(len(sources))[None, :], table].sum(axis=1)
    best = int(np.argmin(costs))
    return tuple(table[best]), float(costs[best])


def _isolation(vals, assign):
    """Smallest distance from any assigned eigenvalue to a different eigenvalue."""
    out = np.inf
    for j in assign:
        d = np.abs(vals - vals[j])
        d[j] = np.inf
        out = min(out, float(d.min()))
    return out


def braid_index_pair(band_set: BandSet, a: int, c: int) -> float:
    """Winding of strand a around strand c over the period, in units of 2pi.

    Accumulates the phase increments of the strand difference along the grid;
    each increment must stay below pi/2 or the sweep resolution is deemed
    insufficient.  The result is an integer for a 2pi-periodic pair and a
    half-integer when the two strands swap after one period.
    """
    if a == c:
        raise ValueError("strand indices must differ")
    diff = band_set.strands[:, a] - band_set.strands[:, c]
    ratios = diff[1:] / diff[:-1]
    steps = np.angle(ratios)
    if np.any(np.abs(steps) >= np.pi / 2):
        worst = int(np.argmax(np.abs(steps)))
        raise ResolutionError(
            "phase increment of strand difference exceeds pi/2 near "
            f"k = {band_set.k_grid[worst]:.6f}; refine the sweep"
        )
    return float(np.sum(steps) / (2 * np.pi))


def braid_indices(band_set: BandSet) -> BraidClassification:
    """Pairwise and total winding indices of the tracked strands.

    A pairwise index ``nu_ab[a, b]`` is only meaningful (and quantized) when
    the loop permutation maps the strand pair {a, b} to itself; for mixed
    periodicities the entry is NaN and only the combined total is reported,
    which is always an integer.  The class label is left "Unknown";
    :func:`classify` fills it after word extraction.
    """
    n = N_STRANDS
    perm = band_set.loop_permutation
    nu_pair = np.zeros((n, n))
    for a in range(n):
        for c in range(n):
            if a != c:
                nu_pair[a, c] = braid_index_pair(band_set, a, c)
    total = float(nu_pair.sum())
    if abs(total - round(total)) > 1e-6:
        raise ResolutionError(
            f"total braid index {total:.8f} is not integral; refine the sweep"
        )
    nu_ab = nu_pair + nu_pair.T
    for a in range(n):
        for c in range(n):
            if a != c and {perm[a], perm[c]} != {a, c}:
                nu_ab[a, c] = np.nan
    quantized = nu_ab[np.isfinite(nu_ab)]
    if np.any(np.abs(quantized - np.round(quantized)) > 1e-6):
        raise ResolutionError("pairwise braid index not integral; refine the sweep")
    nu_ab = np.where(np.isfinite(nu_ab), np.round(nu_ab), np.nan)
    return BraidClassification(
        nu_pair=nu_pair,
        nu_ab=nu_ab,
        nu_total=int(round(total)),
        word=(),
        class_label="Unknown",
    )


def _generic_basepoint(strands):
    """Grid index where the real parts are farthest from pairwise degeneracy."""
    re = strands.real
    n = strands.shape[1]
    sep = np.full(strands.shape[0], np.inf)
    for i in range(n):
        for j in range(i + 1, n):
            sep = np.minimum(sep, np.abs(re[:, i] - re[:, j]))
    return int(np.argmax(sep))


def extract_word(band_set: BandSet) -> tuple:
    """Braid word from the transversal crossings of the strand real parts.

    The word is read starting from an automatically chosen generic basepoint
    (crossings of closed braids are only defined up to cyclic rotation, so
    the basepoint choice is immaterial).  A crossing whose interpolated
    imaginary-part separation vanishes is tangential and aborts extraction.
    """
    rows = band_set.strands[:-1]  # row N duplicates row 0 up to the permutation
    k_grid = band_set.k_grid[:-1]
    base = _generic_basepoint(rows)
    perm = list(band_set.loop_permutation)
    # continue past k = 2pi with the permuted copies of the first rows, so the
    # window [k_base, k_base + 2pi] is a continuous closed path
    wrapped = rows[: base + 1][:, perm]
    closed = np.vstack([rows[base:], wrapped])
    k_closed = np.concatenate([k_grid[base:], k_grid[: base + 1] + 2 * np.pi])

    word = []
    for i in range(len(closed) - 1):
        word.extend(_interval_crossings(closed[i], closed[i + 1], k_closed[i]))
    return tuple(word)


def _interval_crossings(row0, row1, k_left):
    """Signed generators for the rank changes between two adjacent samples."""
    order0 = list(np.argsort(-row0.real, kind="stable"))
    order1 = list(np.argsort(-row1.real, kind="stable"))
    if order0 == order1:
        return []
    crossings = []
    # resolve the permutation into adjacent transpositions, crossing the pair
    # with the earliest interpolated crossing parameter first
    work = order0[:]
    guard = 0
    while work != order1 and guard < 16:
        guard += 1
        candidates = []
        for pos in range(len(work) - 1):
            a, b = work[pos], work[pos + 1]
            da = row1[a].real - row0[a].real
            db = row1[b].real - row0[b].real
            num = row0[a].real - row0[b].real
            den = num - (row1[a].real - row1[b].real)
            if den == 0:
                continue
            s = num / den  # fraction of the interval where Re parts meet
            # only accept swaps that move toward the target order
            if -1e-12 <= s <= 1 + 1e-12 and order1.index(a) > order1.index(b):
                candidates.append((s, pos, a, b))
        if not candidates:
            raise DegeneracyError(
                f"cannot resolve rank change near k = {k_left:.6f}; "
                "tangential crossing or unresolved degeneracy"
            )
        s, pos, a, b = min(candidates)
        im_a = (1 - s) * row0[a].imag + s * row1[a].imag
        im_b = (1 - s) * row0[b].imag + s * row1[b].imag
        if abs(im_a - im_b) < 1e-13:
            raise DegeneracyError(
                f"tangential crossing near k = {k_left:.6f}: imaginary parts "
                "coincide at the crossing (probable exceptional point)"
            )
        # strand a sits at the upper rank; positive when it carries larger Im
        sign = 1 if im_a > im_b else -1
        crossings.append(sign * (pos + 1))
        work[pos], work[pos + 1] = work[pos + 1], work[pos]
    if work != order1:
        raise DegeneracyError(
            f"rank change near k = {k_left:.6f} did not resolve into adjacent swaps"
        )
    return crossings


# --- braid word algebra -------------------------------------------------

def burau_matrix(gen: int, t: float = BURAU_T) -> np.ndarray:
    """Reduced Burau image of a signed generator (+-1, +-2) for three strands."""
    if gen == 1:
        m = np.array([[t, 1.0], [0.0, 1.0]])
    elif gen == 2:
        m = np.array([[1.0, 0.0], [-t, t]])
    elif gen == -1:
        m = np.linalg.inv(np.array([[t, 1.0], [0.0, 1.0]]))
    elif gen == -2:
        m = np.linalg.inv(np.array([[1.0, 0.0], [-t, t]]))
    else:
        raise ValueError(f"not a three-strand generator: {gen}")
    return m


def burau_product(word, t: float = BURAU_T) -> np.ndarray:
    out = np.eye(2)
    for g in word:
        out = out @ burau_matrix(g, t)
    return out


def free_reduce(word) -> tuple:
    """Cancel adjacent inverse pairs until none remain."""
    out = []
    for g in word:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def cyclic_reduce(word) -> tuple:
    """Free reduction on the circle: also cancel first-against-last."""
    w = list(free_reduce(word))
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
        w = list(free_reduce(w))
    return tuple(w)


def exponent_sum(word) -> int:
    return sum(1 if g > 0 else -1 for g in word)


def words_equivalent(w1, w2) -> bool:
    """Equality of closed three-strand braids.

    Two words are equivalent iff one is reachable from the other by free
    reduction, the braid relation and cyclic rotations.  The check compares
    exponent sums (invariant under all three moves) and then looks for a
    cyclic rotation of the first word whose Burau image matches the second;
    faithfulness of the representation makes the matrix comparison decide
    braid equality exactly.
    """
    w1 = cyclic_reduce(w1)
    w2 = cyclic_reduce(w2)
    if exponent_sum(w1) != exponent_sum(w2):
        return False
    target = burau_product(w2)
    rotations = [w1] if not w1 else [w1[i:] + w1[:i] for i in range(len(w1))]
    for rot in rotations:
        if np.allclose(burau_product(rot), target, rtol=0, atol=1e-9):
            return True
    return False


def invert_word(word) -> tuple:
    """Flip every crossing (global over/under inversion, not group inverse)."""
    return tuple(-g for g in word)


def format_word(word) -> str:
    """ASCII form: 's1 s2^-1 ...'; the empty word renders as '1'."""
    if not word:
        return "1"
    parts = []
    for g in word:
        parts.append(f"s{abs(g)}" if g > 0 else f"s{abs(g)}^-1")
    return " ".join(parts)


def parse_word(text: str) -> tuple:
    """Inverse of :func:`format_word`."""
    text = text.strip()
    if text in ("", "1"):
        return ()
    out = []
    for tok in text.split():
        neg = tok.endswith("^-1")
        core = tok[:-3] if neg else tok
        if not core.startswith("s") or not core[1:].isdigit():
            raise ValueError(f"malformed braid word token {tok!r}")
        idx = int(core[1:])
        out.append(-idx if neg else idx)
    return tuple(out)


def classify(p: ModelParams, grid_size: int = 512) -> BraidClassification:
    """Sweep, compute indices, extract the word and match it to classes I..V.

    Matching is up to cyclic rotation and a global inversion of all
    generators.  If no reference word matches, the label is "Unknown" and
    the indices are still reported.
    """
    band_set = sweep(p, grid_size=grid_size)
    indices = braid_indices(band_set)
    word = extract_word(band_set)
    label = "Unknown"
    for name, ref in CLASS_WORDS.items():
        if words_equivalent(word, ref) or words_equivalent(invert_word(word), ref):
            label = name
            break
    return BraidClassification(
        nu_pair=indices.nu_pair,
        nu_ab=indices.nu_ab,
        nu_total=indices.nu_total,
        word=free_reduce(word),
        class_label=label,
    )
