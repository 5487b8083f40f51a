"""Command-line front end: profile files in, deterministic datasets out.

Subcommands
-----------
``delta-map``    raster of ``Delta``, its classification and ``Im K`` over an (omega, k) grid
``band``         Floquet branches ``omega_n(K)`` at fixed ``k`` with band edges and stopband attenuation
``isofreq``      real isofrequency branches ``K_j(k)`` at fixed ``omega`` (+ convexity, truncated series)
``zws-scan``     zero-width stopbands along a ``k`` grid
``green``        scalar Green kernel and (optionally) a resolvent response on a grid
``wkb-compare``  exact ``Delta`` against its high-frequency WKB approximation
``verify``       invariant suite with measured residuals

Every dataset starts with a header carrying a hash of the configuration
(profile, grids, tolerances and options, but not ``--jobs``/``--format``), so
serial and parallel runs of the same configuration produce byte-identical
output.  Exit codes: 0 success, 2 configuration error, 3 numerical failure
(failing points are still written as ``status=error`` rows).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import os
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .asymptotics import (
    bound_growth_upper,
    first_eig_bounds,
    wkb_delta,
)
from .errors import Floquet1DError, MultipleJumps, NotSupersonic, ProfileError
from .greenfn import GreenFunction, operator_residual, resolvent_apply, symmetry_residuals
from .isofreq import convexity_certificate, first_cutoff_pi, iso_branches, truncated_series_isofreq
from .loader import load_profile
from .lyapunov import classify, d_delta_fd, d_delta_integral, delta_values, floquet_K
from .matricant import MatricantTable, QuadratureConfig, monodromy
from .profile import MaterialProfile
from .spectrum import band_edges, branch_omega, floquet_branches, spectral_skeleton, stopband_profile, zws_scan

__all__ = ["main", "build_parser", "RunConfig", "parse_grid", "run"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
DEFAULT_PROFILE = "builtin:cubic-graded"
VERIFY_PROFILES = ("builtin:cubic-graded", "builtin:contrast-bilayer", "builtin:soft-bilayer")

#: columns carrying a frequency or wavenumber; rescaled by ``--physical``
_SCALED = {"omega", "k", "K", "im_K", "omega_ext", "lower", "upper", "k10", "k_lo", "k_hi", "dK_dk_edge"}


class ConfigError(Exception):
    """Invalid command-line configuration (exit code 2)."""


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def parse_grid(text: str | None, name: str) -> tuple[float, ...] | None:
    """Parse ``a:b:n`` (``n`` equispaced points), a single value or a comma list."""
    if text is None:
        return None
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ConfigError(f"--{name}: grid needs at least one point")
            if n > 1 and not b > a:
                raise ConfigError(f"--{name}: grid step must be positive (need b > a)")
            values = tuple(float(v) for v in np.linspace(a, b, n))
        else:
            values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"--{name}: expected a:b:n, a value or a comma list, got {text!r}") from exc
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError(f"--{name}: grid must be nonempty and finite")
    return values


@dataclass
class RunConfig:
    """Resolved configuration of one CLI run (grids in cell units)."""

    subcommand: str
    profile_source: str
    omega: tuple[float, ...] | None
    k: tuple[float, ...] | None
    K: tuple[float, ...] | None
    tol: float
    scheme: str
    fmt: str = "csv"
    jobs: int = 1
    physical: bool = False
    options: dict = field(default_factory=dict)

    def quadrature(self) -> QuadratureConfig:
        return QuadratureConfig(abs_tol=0.1 * self.tol, rel_tol=self.tol, scheme=self.scheme)

    def hash_payload(self, profile: MaterialProfile | None) -> dict:
        data = asdict(self)
        data.pop("jobs")
        data.pop("fmt")
        data["profile"] = repr(profile) if profile is not None else self.profile_source
        data["version"] = __version__
        return data

    def config_hash(self, profile: MaterialProfile | None) -> str:
        blob = json.dumps(self.hash_payload(profile), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# parallel map preserving grid order
# --------------------------------------------------------------------------


def _ordered_map(fn: Callable, units: Sequence, jobs: int) -> list:
    """``[fn(u) for u in units]``, optionally in worker processes (order preserved)."""
    if jobs <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ProcessPoolExecutor(max_workers=min(jobs, len(units))) as pool:
        return list(pool.map(fn, units))


def _guard(fn: Callable[..., list[dict]], base: dict, *args) -> list[dict]:
    """Run one work unit; numerical failures become a single error row."""
    try:
        rows = fn(*args)
    except (Floquet1DError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        return [dict(base, status="error", message=f"{type(exc).__name__}: {exc}")]
    return [dict(r, status=r.get("status", "ok")) for r in rows]


# --------------------------------------------------------------------------
# subcommand workers (module level so that they pickle)
# --------------------------------------------------------------------------


def _delta_row_unit(args) -> list[dict]:
    profile, k, omegas, cfg = args

    def work():
        d = delta_values(profile, np.square(omegas), k * k, cfg).real
        out = []
        for w, dv in zip(omegas, d):
            out.append({"omega": w, "k": k, "delta": float(dv), "classification": classify(float(dv)).value,
                        "im_K": float(floquet_K(float(dv)).imag)})
        return out

    return _guard(work, {"k": k})


def _band_unit(args) -> list[dict]:
    profile, k, Ks, nbr, cfg = args

    def work():
        top = max(branch_omega(profile, 0.0, k, nbr, cfg).omega, branch_omega(profile, np.pi, k, nbr, cfg).omega)
        omega_max = top * (1.0 + 1e-6) + 1e-9
        sk = spectral_skeleton(profile, k, omega_max, cfg)
        table = np.full((len(Ks), nbr), np.nan)
        for i, K in enumerate(Ks):
            for root in floquet_branches(profile, K, k, omega_max, cfg, skeleton=sk):
                if 1 <= root.n <= nbr:
                    table[i, root.n - 1] = root.omega
        order = np.argsort(np.abs(np.mod(np.asarray(Ks) + np.pi, 2 * np.pi) - np.pi), kind="stable")
        rows = []
        for n in range(1, nbr + 1):
            seq = table[order, n - 1]
            seq = seq[np.isfinite(seq)]
            steps = np.diff(seq)
            monotone = bool(np.all(steps >= -1e-9) or np.all(steps <= 1e-9))
            for i, K in enumerate(Ks):
                rows.append({"kind": "branch", "k": k, "K": K, "n": n, "omega": float(table[i, n - 1]),
                             "monotone": monotone})
        for e in band_edges(profile, k, omega_max, cfg, skeleton=sk):
            if e.n <= nbr:
                rows.append({"kind": "edge", "k": k, "n": e.n, "m": e.m, "omega": e.omega,
                             "zws_candidate": e.zws_candidate})
        for band in range(0 if k > 0 else 1, nbr):
            sp = stopband_profile(profile, k, band, cfg)
            for w, ik in zip(sp.omega, sp.im_K):
                rows.append({"kind": "stopband", "k": k, "n": band, "m": sp.m, "omega": float(w), "im_K": float(ik)})
        return rows

    return _guard(work, {"kind": "branch", "k": k})


def _isofreq_unit(args) -> list[dict]:
    profile, omega, k_max, terms, cfg = args

    def work():
        rows = []
        for b in iso_branches(profile, omega, k_max=k_max, cfg=cfg):
            for kk, KK in b.points:
                rows.append({"kind": "point", "omega": omega, "j": b.j, "k": float(kk), "K": float(KK)})
            for kk, m in b.edges:
                rows.append({"kind": "edge", "omega": omega, "j": b.j, "k": float(kk), "m": m,
                             "zws": any(abs(kk - z) <= 1e-9 * max(1.0, kk) for z in b.zws_edges)})
        if omega < first_cutoff_pi(profile, cfg):
            rows.extend(_certificate_rows(convexity_certificate(profile, omega, cfg), omega, "exact"))
        if terms is not None:
            tb = truncated_series_isofreq(profile, omega, terms, cfg)
            for kk, KK in tb.points:
                rows.append({"kind": "truncated-point", "omega": omega, "j": 1, "k": float(kk), "K": float(KK)})
            rows.extend(_certificate_rows(tb.convexity, omega, f"truncated-{terms}"))
        return rows

    return _guard(work, {"kind": "point", "omega": omega})


def _certificate_rows(cert, omega, source) -> list[dict]:
    rows = [{"kind": "curvature", "source": source, "omega": omega, "k": float(kk), "h": float(h)}
            for kk, h in zip(cert.k, cert.h)]
    rows.append({"kind": "certificate", "source": source, "omega": omega, "k10": cert.k10, "min_h": cert.min_h,
                 "convex": cert.passed, "bounds_ok": cert.bounds_ok})
    return rows


def _wkb_unit(args) -> list[dict]:
    profile, k, omegas, cfg = args

    def work():
        exact = delta_values(profile, np.square(omegas), k * k, cfg).real
        rows = []
        for w, d in zip(omegas, exact):
            row = {"omega": w, "k": k, "delta": float(d)}
            try:
                approx = wkb_delta(profile, w, k)
                row.update(wkb=approx, deviation=abs(approx - float(d)))
            except NotSupersonic:
                row.update(status="skipped", message="subsonic: WKB approximation not applicable")
            rows.append(row)
        return rows

    return _guard(work, {"k": k})


def _green_unit(args) -> list[dict]:
    profile, K, omega, k, ys, sources, forcing, mode, cfg = args

    def work():
        gf = GreenFunction(profile, K, omega * omega, k * k, cfg)
        Y, S = np.meshgrid(np.asarray(ys), np.asarray(sources), indexing="ij")
        G = gf.scalar(Y, S)
        rows = []
        for j, s in enumerate(sources):
            for i, y in enumerate(ys):
                g = complex(G[i, j])
                rows.append({"kind": "kernel", "K": K, "omega": omega, "k": k, "y": y, "s": s,
                             "re": g.real, "im": g.imag})
        if forcing is not None:
            yy = np.linspace(0.0, 1.0, len(ys))
            g = np.ones_like(yy) if forcing == "unit" else np.cos(2 * np.pi * yy)
            u = resolvent_apply(profile, K, mode, (omega * omega, k * k), g, cfg)
            for y, val in zip(yy, u):
                rows.append({"kind": "response", "K": K, "omega": omega, "k": k, "y": float(y),
                             "re": float(val.real), "im": float(val.imag)})
            order = 4 if len(ys) >= 17 else 2
            res = operator_residual(profile, K, mode, (omega * omega, k * k), g, u, order=order)
            rows.append({"kind": "residual", "order": order, "K": K, "omega": omega, "k": k, "operator": res["operator"],
                         "quasi_periodic": res["quasi_periodic"]})
        return rows

    return _guard(work, {"kind": "kernel", "K": K, "omega": omega, "k": k})


# --------------------------------------------------------------------------
# verification suite
# --------------------------------------------------------------------------


def _check(name, value, tol, source) -> dict:
    return {"check": name, "profile": source, "value": float(value), "tolerance": float(tol),
            "passed": bool(np.isfinite(value) and value <= tol)}


def _verify_matricant(profile, source, cfg):
    pts = [(w, k) for w in (0.7, 3.1, 7.9) for k in (0.0, 1.3, 4.2)]
    det = max(abs(monodromy(profile, 0.0, w * w, k * k, cfg).det - 1.0) for w, k in pts)
    struct = max(monodromy(profile, 0.0, w * w, k * k, cfg).structure_residual() for w, k in pts)
    return [_check("matricant.det", det, 1e-10, source), _check("matricant.structure", struct, 1e-9, source)]


def _verify_trace(profile, source, cfg):
    worst = 0.0
    for w, k in ((2.3, 0.4), (6.1, 1.7)):
        tab = MatricantTable(profile, w * w, k * k, cfg)
        tr = np.trace(tab.period_map(np.linspace(0.1, 0.9, 9)), axis1=-2, axis2=-1)
        worst = max(worst, float(np.max(np.abs(tr - 2.0 * tab.delta))))
    return [_check("matricant.trace_invariance", worst, 1e-9, source)]


def _verify_derivatives(profile, source, cfg):
    worst = 0.0
    for w, k in ((2.1, 0.5), (5.3, 1.1)):
        a = d_delta_integral(profile, w * w, k * k, cfg)
        b = d_delta_fd(profile, w * w, k * k, cfg)
        for x, y in ((a.d_dw2, b.d_dw2), (a.d_dk2, b.d_dk2)):
            worst = max(worst, abs(x - y) / max(abs(y), 1e-12))
    return [_check("lyapunov.derivative_vs_fd", worst, 1e-5, source)]


def _verify_spectrum(profile, source, cfg):
    """Zeros of ``Delta`` and its extrema interlace, and every extremum has ``|Delta| >= 1``."""
    rows = []
    for k in (0.0, 1.0):
        sk = spectral_skeleton(profile, k, 12.0, cfg)
        ext, zeros = np.asarray(sk.extrema), np.asarray(sk.zeros)
        bounds = np.concatenate([[0.0], ext])
        counts = np.histogram(zeros, bins=bounds)[0] if ext.size else np.zeros(0)
        violations = int(np.sum(counts != 1))
        excess = float(np.max(1.0 - np.abs(sk.delta_ext), initial=0.0))
        rows.append(_check(f"spectrum.interlacing_k{k:g}", violations, 0, source))
        rows.append(_check(f"spectrum.extremum_excess_k{k:g}", max(excess, 0.0), 1e-7, source))
    return rows


def _verify_bounds(profile, source, cfg):
    worst = 0.0
    for w2, k2 in ((3 + 4j, 1 - 2j), (-5 + 1j, 7j), (20.0, 2.0)):
        worst = max(worst, -bound_growth_upper(profile, w2, k2, cfg).slack)
    for K, k in ((0.5, 0.0), (2.0, 1.0)):
        for rep in first_eig_bounds(profile, K, k, cfg):
            worst = max(worst, -rep.slack)
    return [_check("asymptotics.bound_violation", max(worst, 0.0), 1e-9, source)]


def _verify_green(profile, source, cfg):
    K, w2, k2 = 0.9, 7.0, 1.0
    y = np.linspace(0.0, 1.0, 513)
    g = np.cos(2 * np.pi * y) + 0.25 * y
    u = resolvent_apply(profile, K, "A", (w2, k2), g, cfg)
    res = operator_residual(profile, K, "A", (w2, k2), g, u, order=4)
    sym = symmetry_residuals(profile, K, w2, k2, cfg=cfg)
    return [
        _check("green.operator_residual", res["operator"], 1e-4, source),
        _check("green.quasi_periodic", res["quasi_periodic"], 1e-8, source),
        _check("green.kernel_symmetry", max(sym.values()), 1e-9, source),
    ]


_VERIFY_CHECKS = {
    "matricant": _verify_matricant,
    "trace": _verify_trace,
    "derivatives": _verify_derivatives,
    "spectrum": _verify_spectrum,
    "bounds": _verify_bounds,
    "green": _verify_green,
}


def _verify_unit(args) -> list[dict]:
    profile, source, name, cfg = args
    return _guard(_VERIFY_CHECKS[name], {"check": name, "profile": source, "passed": False}, profile, source, cfg)


# --------------------------------------------------------------------------
# dataset assembly and output
# --------------------------------------------------------------------------


def _scale_rows(rows: list[dict], factor: float) -> list[dict]:
    out = []
    for r in rows:
        out.append({key: (val / factor if key in _SCALED and isinstance(val, float) else val) for key, val in r.items()})
    return out


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _json_value(value: Any):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_dataset(rows: list[dict], header: dict, fmt: str, stream) -> None:
    """Emit ``rows`` (list of flat dicts) with the header block."""
    columns: list[str] = []
    for r in rows:
        for key in r:
            if key not in columns:
                columns.append(key)
    if fmt == "jsonl":
        stream.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for r in rows:
            stream.write(json.dumps({c: _json_value(r[c]) for c in columns if c in r}) + "\n")
        return
    for key in sorted(header):
        stream.write(f"# {key}: {header[key]}\n")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in columns])
    stream.write(buf.getvalue())


def _require(values, name: str) -> tuple[float, ...]:
    if values is None:
        raise ConfigError(f"--{name} is required for this subcommand")
    return values


def _single(values, name: str) -> float:
    vals = _require(values, name)
    if len(vals) != 1:
        raise ConfigError(f"--{name} must be a single value for this subcommand")
    return vals[0]


def _units(cfg: RunConfig, profile: MaterialProfile) -> tuple[list, Callable]:
    """Work units and worker for ``cfg.subcommand`` (grids already in cell units)."""
    q = cfg.quadrature()
    opt = cfg.options
    sub = cfg.subcommand
    if sub == "delta-map":
        omegas = np.asarray(_require(cfg.omega, "omega"))
        return [(profile, k, omegas, q) for k in _require(cfg.k, "k")], _delta_row_unit
    if sub == "wkb-compare":
        omegas = np.asarray(_require(cfg.omega, "omega"))
        return [(profile, k, omegas, q) for k in _require(cfg.k, "k")], _wkb_unit
    if sub == "band":
        Ks = cfg.K if cfg.K is not None else tuple(float(v) for v in np.linspace(0.0, np.pi, 33))
        ks = cfg.k if cfg.k is not None else (1.0,)
        return [(profile, k, Ks, opt["branches"], q) for k in ks], _band_unit
    if sub == "isofreq":
        return [(profile, w, opt.get("k_max"), opt.get("truncate_terms"), q)
                for w in _require(cfg.omega, "omega")], _isofreq_unit
    if sub == "green":
        K = _single(cfg.K, "K")
        omega = _single(cfg.omega, "omega")
        k = _single(cfg.k, "k")
        n = opt["points"]
        ys = tuple(float(v) for v in np.linspace(0.0, 1.0, n))
        return [(profile, K, omega, k, ys, opt["sources"], opt.get("forcing"), opt["mode"], q)], _green_unit
    raise ConfigError(f"unknown subcommand {sub!r}")


def run(cfg: RunConfig, stream) -> int:
    """Execute one configured run, writing the dataset to ``stream``; returns the exit code."""
    if cfg.subcommand == "verify":
        return _run_verify(cfg, stream)
    profile = load_profile(cfg.profile_source)
    factor = profile.period_scale if cfg.physical else 1.0
    if cfg.physical:
        scale = lambda g: None if g is None else tuple(v * factor for v in g)
        cfg_cell = RunConfig(**{**asdict(cfg), "omega": scale(cfg.omega), "k": scale(cfg.k), "K": scale(cfg.K)})
    else:
        cfg_cell = cfg
    if cfg.subcommand == "wkb-compare":
        try:
            wkb_delta(profile, 1e6, 0.0)
        except MultipleJumps as exc:
            raise ConfigError(f"wkb-compare: {exc}") from exc
    if cfg.subcommand == "zws-scan":
        q = cfg_cell.quadrature()
        ks = _require(cfg_cell.k, "k")
        omega_max = max(_require(cfg_cell.omega, "omega"))
        rows = _guard(lambda: [
            {"omega": r.omega, "k": r.k, "sign": r.sign, "residual_M": r.residual_M, "residual_m2": r.residual_m2,
             "newton_converged": r.newton_converged, "confirmed": r.confirmed}
            for r in zws_scan(profile, ks, omega_max, q)
        ], {"omega": omega_max})
    else:
        units, worker = _units(cfg_cell, profile)
        rows = [row for chunk in _ordered_map(worker, units, cfg.jobs) for row in chunk]
    if cfg.physical:
        rows = _scale_rows(rows, factor)
    header = {
        "tool": f"floquet1d {__version__}",
        "subcommand": cfg.subcommand,
        "profile": profile.name or cfg.profile_source,
        "units": "physical (1/period_scale)" if cfg.physical else "cell (period = 1)",
        "period_scale": repr(profile.period_scale),
        "config_hash": cfg.config_hash(profile),
    }
    write_dataset(rows, header, cfg.fmt, stream)
    return EXIT_NUMERIC if any(r.get("status") == "error" for r in rows) else EXIT_OK


def _run_verify(cfg: RunConfig, stream) -> int:
    sources = (cfg.profile_source,) if cfg.options.get("profile_given") else VERIFY_PROFILES
    profiles = [(src, load_profile(src)) for src in sources]
    q = cfg.quadrature()
    units = [(p, src, name, q) for src, p in profiles for name in _VERIFY_CHECKS]
    rows = [row for chunk in _ordered_map(_verify_unit, units, cfg.jobs) for row in chunk]
    failed = sum(1 for r in rows if not r.get("passed"))
    header = {
        "tool": f"floquet1d {__version__}",
        "subcommand": "verify",
        "profiles": ",".join(sources),
        "config_hash": cfg.config_hash(None),
        "failed": failed,
        "checks": len(rows),
    }
    write_dataset(rows, header, cfg.fmt, stream)
    return EXIT_NUMERIC if failed else EXIT_OK


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--profile", default=None,
                        help=f"profile file (.yaml/.yml/.json) or builtin:<name> (default {DEFAULT_PROFILE})")
    common.add_argument("--omega", help="frequency grid a:b:n, a value or a comma list")
    common.add_argument("--k", help="in-plane wavenumber grid a:b:n, a value or a comma list")
    common.add_argument("--K", help="Floquet parameter grid a:b:n, a value or a comma list")
    common.add_argument("--tol", type=float, default=1e-12, help="relative tolerance of product integration")
    common.add_argument("--scheme", default="fourth-order-commutator",
                        choices=["fourth-order-commutator", "midpoint-frozen"], help="matricant integrator")
    common.add_argument("--format", dest="fmt", default="csv", choices=["csv", "jsonl"])
    common.add_argument("--jobs", type=int, default=1, help="worker processes (output order is unaffected)")
    common.add_argument("--physical", action="store_true",
                        help="grids and outputs in physical units (rescaled by the profile's period_scale)")
    common.add_argument("--output", "-o", default="-", help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="floquet1d", description="Floquet-Bloch spectra of SH waves in 1D periodic media")
    parser.add_argument("--version", action="version", version=f"floquet1d {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    subs.add_parser("delta-map", parents=[common], help="Delta, classification and Im K over an (omega, k) grid")
    band = subs.add_parser("band", parents=[common], help="branches omega_n(K) at fixed k, band edges, attenuation")
    band.add_argument("--branches", type=int, default=4, help="number of branches (default 4)")
    iso = subs.add_parser("isofreq", parents=[common], help="real isofrequency branches K_j(k) at fixed omega")
    iso.add_argument("--truncate-terms", type=int, default=None, help="also evaluate the truncated layer series")
    iso.add_argument("--k-max", type=float, default=None, help="truncate branches at this k")
    subs.add_parser("zws-scan", parents=[common], help="zero-width stopbands along a k grid (omega up to max --omega)")
    green = subs.add_parser("green", parents=[common], help="scalar Green kernel and resolvent response")
    green.add_argument("--points", type=int, default=65, help="y grid points on [0, 1]")
    green.add_argument("--source", default="0.5", help="source points s (grid syntax)")
    green.add_argument("--mode", default="A", choices=["A", "B"], help="operator for the resolvent response")
    green.add_argument("--forcing", default=None, choices=["unit", "cos"], help="also solve for this forcing")
    subs.add_parser("wkb-compare", parents=[common], help="exact Delta versus its WKB approximation")
    subs.add_parser("verify", parents=[common], help="run the invariant suite")
    return parser


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    if not ns.tol > 0:
        raise ConfigError("--tol must be positive")
    if ns.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    options: dict = {"profile_given": ns.profile is not None}
    if ns.subcommand == "band":
        if ns.branches < 1:
            raise ConfigError("--branches must be >= 1")
        options["branches"] = ns.branches
    if ns.subcommand == "isofreq":
        if ns.truncate_terms is not None and ns.truncate_terms < 1:
            raise ConfigError("--truncate-terms must be >= 1")
        options["truncate_terms"] = ns.truncate_terms
        options["k_max"] = ns.k_max
    if ns.subcommand == "green":
        if ns.points < 3:
            raise ConfigError("--points must be >= 3")
        options.update(points=ns.points, sources=parse_grid(ns.source, "source"), mode=ns.mode, forcing=ns.forcing)
        if any(not 0.0 <= s <= 1.0 for s in options["sources"]):
            raise ConfigError("--source points must lie in [0, 1]")
    return RunConfig(
        subcommand=ns.subcommand,
        profile_source=ns.profile or DEFAULT_PROFILE,
        omega=parse_grid(ns.omega, "omega"),
        k=parse_grid(ns.k, "k"),
        K=parse_grid(ns.K, "K"),
        tol=ns.tol,
        scheme=ns.scheme,
        fmt=ns.fmt,
        jobs=ns.jobs,
        physical=ns.physical,
        options=options,
    )


def main(argv: Iterable[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    ns = parser.parse_args(None if argv is None else list(argv))
    try:
        cfg = _config_from_args(ns)
        if ns.output == "-":
            return run(cfg, sys.stdout)
        buf = io.StringIO()
        code = run(cfg, buf)
        with open(ns.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        return code
    except BrokenPipeError:  # downstream closed early (e.g. ``| head``)
        # keep the interpreter's final flush from raising again
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK
    except ProfileError as exc:
        print(f"floquet1d: profile error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError) as exc:
        print(f"floquet1d: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
