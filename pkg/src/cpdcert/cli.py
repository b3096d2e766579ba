"""Command-line front end.

Exit codes: 0 for any completed analysis (including "not unique" and
"undetermined" conclusions), 1 for input or validation errors, 2 when a
combinatorial quantity exceeds the cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .certify import certify_overall, certify_third_factor, mode_rotate, replay
from .combinatorics import subsets
from .compound import compound
from .conditions import check_Cm, check_Hm, check_Km, check_Um, check_Wm, h_profile, m_for_C
from .errors import CAP_ENV_VAR, DomainError, ResourceError, combinatorial_cap
from .linalg import DEFAULT_TOL, EXACT, FLOAT, Matrix, k_rank, matrix_rank, to_fraction
from .tensor import FactorTriple, match_factors, match_single_factor

COMMANDS = ("analyze", "certify-third", "certify-overall", "compound", "krank", "hprofile", "match")
MODE_KEYS = {1: "A", 2: "B", 3: "C"}


class InputError(Exception):
    """Malformed input file; the message carries the location."""


@dataclass
class JobSpec:
    inputs: list[str] = field(default_factory=list)
    command: str = "analyze"
    backend: str | None = None
    tol: float = DEFAULT_TOL
    seed: int = 0
    target: int = 3
    m: int | None = None
    format: str = "json"
    replay: str | None = None
    cap: int | None = None


# loading ------------------------------------------------------------------------

_FLOAT_TOKEN = re.compile(r"[.eE]|inf|nan", re.IGNORECASE)


@dataclass
class _Entry:
    value: object  # Fraction or float
    is_float: bool


def _locate(text: str, token: str) -> str:
    pos = text.find(token)
    if pos < 0:
        return ""
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return f" at line {line}, column {col}"


def _parse_json_entry(v, where: str, text: str) -> _Entry:
    if isinstance(v, bool) or v is None:
        raise InputError(f"{where}: expected a number or a rational string, got {json.dumps(v)}"
                         + _locate(text, json.dumps(v)))
    if isinstance(v, int):
        return _Entry(Fraction(v), False)
    if isinstance(v, float):
        return _Entry(v, True)
    if isinstance(v, str):
        try:
            return _Entry(to_fraction(v), False)
        except DomainError:
            try:
                return _Entry(float(v), True)
            except ValueError:
                raise InputError(f"{where}: cannot parse {v!r} as a number" + _locate(text, json.dumps(v))) from None
    raise InputError(f"{where}: unsupported value {json.dumps(v)[:40]}")


def _rows_from_json(name: str, value, text: str) -> list[list[_Entry]]:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise InputError(f"matrix {name}: expected a non-empty list of rows")
    width = len(value[0])
    out = []
    for i, row in enumerate(value, start=1):
        if len(row) != width:
            raise InputError(f"matrix {name}: row {i} has {len(row)} entries, expected {width}")
        out.append([_parse_json_entry(v, f"matrix {name}, row {i}, column {j}", text)
                    for j, v in enumerate(row, start=1)])
    if width == 0:
        raise InputError(f"matrix {name}: rows are empty")
    return out


def _rows_from_csv(path: Path) -> list[list[_Entry]]:
    text = path.read_text(encoding="utf-8")
    out = []
    width = None
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InputError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
        entries = []
        for col, tok in enumerate(row, start=1):
            tok = tok.strip()
            try:
                if _FLOAT_TOKEN.search(tok) and "/" not in tok:
                    entries.append(_Entry(float(tok), True))
                else:
                    entries.append(_Entry(to_fraction(tok), False))
            except (ValueError, DomainError):
                raise InputError(f"{path}: line {lineno}, column {col}: cannot parse {tok!r}") from None
        out.append(entries)
    if not out:
        raise InputError(f"{path}: no rows")
    return out


def _to_matrix(rows: list[list[_Entry]], backend: str, tol: float) -> Matrix:
    if backend == EXACT:
        return Matrix([[e.value if not e.is_float else to_fraction(e.value) for e in r] for r in rows], EXACT, tol)
    return Matrix([[float(e.value) for e in r] for r in rows], FLOAT, tol)


def load_matrices(paths: list[str], backend: str | None, tol: float) -> dict[str, Matrix]:
    """Matrices keyed by name. JSON: {"A", "B", "C"} (or a bare matrix); CSV: one file per matrix."""
    raw: dict[str, list[list[_Entry]]] = {}
    if len(paths) == 1 and not paths[0].lower().endswith(".csv"):
        path = Path(paths[0])
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror}") from None
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        if isinstance(obj, list):
            raw["M"] = _rows_from_json("M", obj, text)
        elif isinstance(obj, dict):
            unknown = sorted(set(obj) - {"A", "B", "C", "M"})
            if unknown:
                raise InputError(f"{path}: unknown keys {unknown}; expected A, B, C")
            for k, v in obj.items():
                raw[k] = _rows_from_json(k, v, text)
        else:
            raise InputError(f"{path}: expected a JSON object or array")
    elif all(p.lower().endswith(".csv") for p in paths) and len(paths) in (1, 3):
        names = ["M"] if len(paths) == 1 else ["A", "B", "C"]
        for name, p in zip(names, paths):
            try:
                raw[name] = _rows_from_csv(Path(p))
            except OSError as exc:
                raise InputError(f"{p}: {exc.strerror}") from None
    else:
        raise InputError("give one JSON file or one or three CSV files")
    if backend is None:
        any_float = any(e.is_float for rows in raw.values() for r in rows for e in r)
        backend = FLOAT if any_float else EXACT
    return {k: _to_matrix(v, backend, tol) for k, v in raw.items()}


def _triple(mats: dict[str, Matrix]) -> FactorTriple:
    missing = [k for k in "ABC" if k not in mats]
    if missing:
        raise InputError(f"factor matrices {missing} are missing")
    return FactorTriple(mats["A"], mats["B"], mats["C"])


def _single(mats: dict[str, Matrix], target: int | None) -> tuple[str, Matrix]:
    if len(mats) == 1:
        return next(iter(mats.items()))
    key = MODE_KEYS[target or 1]
    if key not in mats:
        raise InputError(f"matrix {key} is missing")
    return key, mats[key]


# commands --------------------------------------------------------------------


def _labels(n: int, k: int) -> list[list[int]]:
    return [[i + 1 for i in t] for t in subsets(n, k)]


def _summary(f: FactorTriple) -> dict:
    return {
        "shapes": {k: list(M.shape) for k, M in zip("ABC", f.factors())},
        "R": f.R,
        "ranks": {k: matrix_rank(M) for k, M in zip("ABC", f.factors())},
        "k_ranks": {k: k_rank(M) for k, M in zip("ABC", f.factors())},
    }


def _validate_m(job: JobSpec, A: Matrix, B: Matrix) -> None:
    if job.m is not None and not 1 <= job.m <= min(A.rows, B.rows, A.cols):
        raise DomainError(f"--m {job.m} must satisfy 1 <= m <= min(I, J, R) = {min(A.rows, B.rows, A.cols)}")


def _analyze(job: JobSpec, mats) -> dict:
    f0 = _triple(mats)
    f = mode_rotate(f0, job.target)
    A, B, C = f.factors()
    _validate_m(job, A, B)
    m = job.m if job.m is not None else m_for_C(f.R, C)
    out = _summary(f0)
    out["target"] = job.target
    out["m"] = m
    verdicts = {"K": check_Km(A, B, m).to_dict()}
    try:
        verdicts["H"] = check_Hm(A, B, m).to_dict()
    except ResourceError as exc:
        verdicts["H"] = {"status": "skipped", "reason": str(exc)}
    if 1 <= m <= min(A.rows, B.rows, f.R):
        verdicts["C"] = check_Cm(A, B, m).to_dict()
        verdicts["U"] = check_Um(A, B, m, seed=job.seed).to_dict()
        verdicts["W"] = check_Wm(A, B, C, m, seed=job.seed).to_dict()
    else:
        for key in "CUW":
            verdicts[key] = {"status": "not_applicable", "reason": f"m={m} exceeds min(I, J, R)"}
    out["verdicts"] = verdicts
    out["certificates"] = {
        "third": certify_third_factor(*f0.factors(), target=job.target, seed=job.seed).to_dict(),
        "overall": certify_overall(*f0.factors(), seed=job.seed).to_dict(),
    }
    return out


def _run_command(job: JobSpec) -> dict:
    if job.replay is not None:
        return _replay(job.replay)
    if not job.inputs:
        raise InputError("--input is required")
    if job.command == "match":
        return _match(job)
    mats = load_matrices(job.inputs, job.backend, job.tol)
    if job.command == "analyze":
        return _analyze(job, mats)
    if job.command == "certify-third":
        f = _triple(mats)
        return certify_third_factor(*f.factors(), target=job.target, seed=job.seed).to_dict()
    if job.command == "certify-overall":
        f = _triple(mats)
        return certify_overall(*f.factors(), seed=job.seed).to_dict()
    if job.command == "compound":
        name, M = _single(mats, job.target if len(mats) > 1 else None)
        if job.m is None:
            raise DomainError("compound needs --m")
        cm = compound(M, job.m)
        return {"matrix": name, "order": job.m, "shape": list(cm.data.shape),
                "row_labels": _labels(M.rows, job.m), "column_labels": _labels(M.cols, job.m),
                "compound": cm.data.to_strings()}
    if job.command == "krank":
        name, M = _single(mats, job.target if len(mats) > 1 else None)
        return {"matrix": name, "k_rank": k_rank(M), "rank": matrix_rank(M)}
    if job.command == "hprofile":
        f = mode_rotate(_triple(mats), job.target)
        prof = h_profile(f.A, f.B)
        return {"target": job.target, "H": list(prof.values),
                "minimizers": [list(s.entries) for s in prof.minimizers]}
    raise DomainError(f"unknown command {job.command!r}")


def _match(job: JobSpec) -> dict:
    if len(job.inputs) != 2:
        raise InputError("match needs exactly two --input files")
    first = load_matrices([job.inputs[0]], job.backend, job.tol)
    second = load_matrices([job.inputs[1]], job.backend, job.tol)
    if len(first) == 1 and len(second) == 1:
        report = match_single_factor(next(iter(first.values())), next(iter(second.values())))
    else:
        report = match_factors(_triple(first), _triple(second))
    return report.to_dict()


def _replay(path: str) -> dict:
    try:
        cert = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(cert, dict) or "reproducibility" not in cert or "conclusion" not in cert:
        raise InputError(f"{path}: not a certificate")
    fresh = replay(cert).to_dict()
    same = fresh["conclusion"] == cert["conclusion"] and fresh["chain"] == cert["chain"]
    return {"replayed": fresh["conclusion"], "stored": cert["conclusion"], "identical": same}


# output ----------------------------------------------------------------------


def render(obj, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    lines: list[str] = []
    _text(obj, "", lines)
    return "\n".join(lines) + "\n"


def _text(obj, indent: str, lines: list[str]) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v and not _flat_list(v):
                lines.append(f"{indent}{k}:")
                _text(v, indent + "  ", lines)
            else:
                lines.append(f"{indent}{k}: {_scalar_text(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and not _flat_list(v):
                lines.append(f"{indent}-")
                _text(v, indent + "  ", lines)
            else:
                lines.append(f"{indent}- {_scalar_text(v)}")


def _flat_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar_text(v) -> str:
    if isinstance(v, list):
        return "(" + ", ".join(map(str, v)) + ")"
    if isinstance(v, dict):
        return "{}"
    return str(v)


# entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpdcert", description="Uniqueness certificates for polyadic decompositions.")
    p.add_argument("--input", action="append", default=[], metavar="PATH",
                   help="JSON file with A, B, C (or one matrix), or CSV files; repeatable")
    p.add_argument("--command", choices=COMMANDS, default="analyze")
    p.add_argument("--backend", choices=(EXACT, FLOAT), default=None,
                   help="default: exact unless the input contains decimal numbers")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--target", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--replay", metavar="PATH", default=None, help="re-run a stored certificate")
    p.add_argument("--cap", type=int, default=None, help=f"combinatorial cap (env {CAP_ENV_VAR}, default 10000000)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def run(job: JobSpec, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        if job.tol <= 0:
            raise DomainError("--tol must be positive")
        if job.cap is not None:
            if job.cap < 1:
                raise DomainError("--cap must be positive")
            with combinatorial_cap(job.cap):
                result = _run_command(job)
        else:
            result = _run_command(job)
    except ResourceError as exc:
        err.write(f"cpdcert: resource limit: {exc}\n")
        return 2
    except (InputError, DomainError) as exc:
        err.write(f"cpdcert: error: {exc}\n")
        return 1
    out.write(render(result, job.format))
    if job.replay is not None and not result["identical"]:
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = JobSpec(inputs=args.input, command=args.command, backend=args.backend, tol=args.tol, seed=args.seed,
                  target=args.target, m=args.m, format=args.format, replay=args.replay, cap=args.cap)
    return run(job)


if __name__ == "__main__":
    sys.exit(main())
