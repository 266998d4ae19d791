"""CSV and manifest emission.

Flat, diffable text artifacts: a trajectory CSV with the fixed header
"t,h,hprime,max_u,max_v,mass_u,mass_v,zy1", one "x,u,v" CSV per snapshot, and
a key/value manifest embedding the fully resolved configuration so every
output directory is self-describing.  Floats are written with 17 significant
digits, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

from .analysis import Certificates, Verdict, VerdictKind

TRAJECTORY_HEADER = "t,h,hprime,max_u,max_v,mass_u,mass_v,zy1"


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_trajectory_csv(traj, path):
    lines = [TRAJECTORY_HEADER]
    for row in zip(traj.t, traj.h, traj.hprime, traj.max_u, traj.max_v,
                   traj.mass_u, traj.mass_v, traj.zy1):
        lines.append(",".join(fmt(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:g}.csv"


def write_snapshot_csv(snapshot, path):
    lines = ["x,u,v"]
    for x, u, v in zip(snapshot.x, snapshot.u, snapshot.v):
        lines.append(f"{fmt(float(x))},{fmt(float(u))},{fmt(float(v))}")
    Path(path).write_text("\n".join(lines) + "\n")


def format_report(pairs) -> str:
    """Flat key/value document; pairs is a dict or an iterable of (key, value)."""
    items = pairs.items() if hasattr(pairs, "items") else pairs
    return "\n".join(f"{key} = {fmt(value)}" for key, value in items) + "\n"


def certificate_block(certs: Certificates):
    out = [
        ("certificates.M1", certs.M1),
        ("certificates.M2", certs.M2),
        ("certificates.M3", certs.M3),
        ("certificates.K", certs.K),
        ("certificates.barrier", certs.barrier),
        ("certificates.band_floor", certs.band_floor),
    ]
    for name in ("delta", "alpha", "Mcap", "mu0", "mu_upper"):
        value = getattr(certs, name)
        out.append((f"certificates.{name}", "n/a" if value is None else value))
    for i, note in enumerate(certs.notes):
        out.append((f"certificates.note{i}", note))
    return out


def verdict_block(verdict: Verdict):
    out = [("verdict.kind", verdict.kind.value), ("verdict.h_end", verdict.h_end)]
    if verdict.kind is VerdictKind.SPREADING:
        out.append(("verdict.crossing_time", verdict.crossing_time))
        if verdict.speed is not None:
            out.append(("verdict.speed", verdict.speed.k))
            out.append(("verdict.speed_residual", verdict.speed.residual))
    else:
        out.append(("verdict.trailing_max_v", verdict.trailing_max_v))
        out.append(("verdict.trailing_max_u", verdict.trailing_max_u))
        out.append(("verdict.trailing_max_hprime", verdict.trailing_max_hprime))
        if verdict.h_infinity is not None and math.isfinite(verdict.h_infinity):
            out.append(("verdict.h_infinity", verdict.h_infinity))
    return out


def write_manifest(path, config_pairs, certs: Certificates, verdict: Verdict = None):
    pairs = list(config_pairs) + certificate_block(certs)
    if verdict is not None:
        pairs += verdict_block(verdict)
    Path(path).write_text(format_report(pairs))
