"""Plain-text operator files for the absorber-build command.

Format: optional ``#`` comment lines, one header line ``dims d1 d2 ...``,
then one matrix row per line with entries written row-major as ``re,im``
pairs separated by whitespace.  Floats carry 17 significant digits, so a
round trip is exact for double precision.
"""

from __future__ import annotations

import numpy as np

from .operators import Operator, total_dim

__all__ = ["read_operator", "write_operator"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_operator(path, op: Operator, comment: str | None = None) -> None:
    lines = []
    if comment:
        for c in comment.splitlines():
            lines.append(f"# {c}")
    lines.append("dims " + " ".join(str(d) for d in op.dims))
    for row in op.matrix:
        lines.append(" ".join(f"{_fmt(z.real)},{_fmt(z.imag)}" for z in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_operator(path) -> Operator:
    with open(path) as fh:
        content = [ln.strip() for ln in fh
                   if ln.strip() and not ln.lstrip().startswith("#")]
    if not content or not content[0].startswith("dims"):
        raise ValueError(f"{path}: expected a 'dims d1 d2 ...' header line")
    try:
        dims = tuple(int(tok) for tok in content[0].split()[1:])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed dims header: {content[0]!r}") from exc
    d = total_dim(dims)
    if len(content) - 1 != d:
        raise ValueError(f"{path}: expected {d} matrix rows, found {len(content) - 1}")
    mat = np.empty((d, d), dtype=complex)
    for i, line in enumerate(content[1:]):
        entries = line.split()
        if len(entries) != d:
            raise ValueError(f"{path}: row {i} has {len(entries)} entries, expected {d}")
        for j, tok in enumerate(entries):
            try:
                re_s, im_s = tok.split(",")
                mat[i, j] = complex(float(re_s), float(im_s))
            except ValueError as exc:
                raise ValueError(f"{path}: bad entry {tok!r} at ({i},{j})") from exc
    return Operator(mat, dims)
