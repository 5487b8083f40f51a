"""Reading material profiles from YAML/JSON documents and built-in names.

Document layout (YAML shown; JSON is the same tree)::

    name: graded-example
    period: 1.0               # optional physical period; segments are given on [0, period)
    segments:
      - from: 0.0
        to: 1.0
        rho: {polynomial: [2.0, 1.0]}
        mu1: {polynomial: [0.5, 3.25, 6.0, 2.25]}
        mu2: 0.5                # a bare number is a constant

A monoclinic document gives stiffness per segment, reduced to ``mu1, mu2``::

    segments:
      - {from: 0.0, to: 1.0, monoclinic: {rho: 1.0, c44: 2.0, c45: 1.0, c55: 1.0}}

A coefficient is a number, ``{kind: constant|polynomial|rational|sampled,
data: ...}`` or the one-key shorthand ``{constant: v}``, ``{polynomial: [c0,
c1, ...]}`` (ascending powers of ``y``), ``{rational: {numerator: [...],
denominator: [...]}}``, ``{sampled: {y: [...], values: [...]}}``; sampled data
may also be a list of ``[y, value]`` pairs.  The monoclinic keys may also be
given directly on the segment.  Every error carries
the dotted path of the offending field, e.g. ``segments[1].mu2``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import yaml

from .catalog import BUILTIN
from .errors import ProfileError
from .profile import (
    Constant,
    MaterialProfile,
    MonoclinicInput,
    Polynomial,
    Rational,
    Sampled,
    Segment,
    reduce_monoclinic,
)

__all__ = ["load_profile", "profile_from_mapping", "parse_coefficient"]

BUILTIN_PREFIX = "builtin:"
_MONOCLINIC = ("c44", "c45", "c55")


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProfileError(f"expected a number, got {value!r}", field=path)
    return float(value)


def _numbers(value: Any, path: str) -> list[float]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ProfileError(f"expected a non-empty list of numbers, got {value!r}", field=path)
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def parse_coefficient(value: Any, path: str):
    """Build a coefficient function from its document form (see module docstring)."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Constant(float(value))
    if isinstance(value, Mapping) and set(value) == {"kind", "data"}:
        return parse_coefficient({value["kind"]: value["data"]}, path)
    if not isinstance(value, Mapping) or len(value) != 1:
        raise ProfileError(
            "coefficient must be a number or a one-key mapping (constant/polynomial/rational/sampled)", field=path
        )
    (kind, body), = value.items()
    sub = f"{path}.{kind}"
    try:
        if kind == "constant":
            return Constant(_number(body, sub))
        if kind == "polynomial":
            return Polynomial(_numbers(body, sub))
        if kind == "rational":
            if not isinstance(body, Mapping):
                raise ProfileError("rational needs numerator and denominator lists", field=sub)
            return Rational(_numbers(body.get("numerator"), f"{sub}.numerator"),
                            _numbers(body.get("denominator"), f"{sub}.denominator"))
        if kind == "sampled":
            if isinstance(body, list) and all(isinstance(p, (list, tuple)) and len(p) == 2 for p in body):
                body = {"y": [p[0] for p in body], "values": [p[1] for p in body]}
            if not isinstance(body, Mapping):
                raise ProfileError("sampled needs y and values lists", field=sub)
            return Sampled(_numbers(body.get("y"), f"{sub}.y"), _numbers(body.get("values"), f"{sub}.values"))
    except ProfileError as exc:
        if exc.field is None:
            raise ProfileError(str(exc), field=sub) from exc
        raise
    except (TypeError, ValueError) as exc:
        raise ProfileError(str(exc), field=sub) from exc
    raise ProfileError(f"unknown coefficient kind {kind!r}", field=path)


def profile_from_mapping(data: Mapping[str, Any]) -> MaterialProfile:
    """Validate a parsed document and build the (unit-period) profile."""
    if not isinstance(data, Mapping):
        raise ProfileError("profile document must be a mapping")
    name = str(data.get("name", ""))
    period = _number(data.get("period", 1.0), "period")
    if not period > 0:
        raise ProfileError("period must be positive", field="period")
    raw = data.get("segments")
    if not isinstance(raw, list) or not raw:
        raise ProfileError("expected a non-empty list of segments", field="segments")
    plain, mono = [], []
    for i, seg in enumerate(raw):
        path = f"segments[{i}]"
        if not isinstance(seg, Mapping):
            raise ProfileError("segment must be a mapping", field=path)
        a = _number(seg.get("from"), f"{path}.from") / period
        b = _number(seg.get("to"), f"{path}.to") / period
        source, prefix = seg, path
        if "monoclinic" in seg:
            source, prefix = seg["monoclinic"], f"{path}.monoclinic"
            if not isinstance(source, Mapping):
                raise ProfileError("monoclinic must be a mapping of rho, c44, c45, c55", field=prefix)
        is_mono = source is not seg or any(key in seg for key in _MONOCLINIC)
        names = ("rho",) + (_MONOCLINIC if is_mono else ("mu1", "mu2"))
        coeffs = {}
        for key in names:
            if key not in source:
                raise ProfileError("missing coefficient", field=f"{prefix}.{key}")
            fn = parse_coefficient(source[key], f"{prefix}.{key}")
            coeffs[key] = fn.rescaled(period) if period != 1.0 else fn
        if is_mono:
            mono.append((a, b, coeffs["c44"], coeffs["c45"], coeffs["c55"], coeffs["rho"]))
        else:
            plain.append(Segment(a, b, coeffs["rho"], coeffs["mu1"], coeffs["mu2"]))
    if mono and plain:
        raise ProfileError("segments must be all isotropic (mu1/mu2) or all monoclinic (c44/c45/c55)", field="segments")
    if mono:
        return reduce_monoclinic(MonoclinicInput(mono), period_scale=period, name=name)
    return MaterialProfile(plain, period_scale=period, name=name)


def load_profile(source: str | Path) -> MaterialProfile:
    """Load ``builtin:<name>`` or a ``.yaml``/``.yml``/``.json`` profile file.

    Raises
    ------
    ProfileError
        On unreadable files, syntax errors (with line number) or invalid
        fields (with dotted path).
    """
    text = str(source)
    if text.startswith(BUILTIN_PREFIX):
        key = text[len(BUILTIN_PREFIX):]
        if key not in BUILTIN:
            raise ProfileError(f"unknown built-in profile {key!r}; choose from {sorted(BUILTIN)}", field="profile")
        return BUILTIN[key]()
    path = Path(text)
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProfileError(f"cannot read {path}: {exc.strerror}", field="profile") from exc
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(content)
        else:
            data = yaml.safe_load(content)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ProfileError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=None if mark is None else mark.line + 1) from exc
    return profile_from_mapping(data)
