"""Line-oriented text formats for models, evidence, background knowledge.

Model files::

    # comment
    rv <name> <value>,<value>,...
    factor <name> known <rv>,<rv>,... <p>,<p>,...
    factor <name> unknown <rv>,<rv>,...

Potentials are written row-major with the last argument varying fastest,
with 17 significant digits so that serialising and re-parsing reproduces
bit-identical floats. Evidence files hold one ``<rv> <value>`` pair per
line, background knowledge one ``individual <id> <factor>,...`` per line,
query files one RV id per line. ``#`` starts a comment anywhere.
"""
from __future__ import annotations

from math import prod
from typing import Mapping

from .errors import ParseError
from .model import BackgroundKnowledge, Factor, FactorGraph, RandomVariable, RangeSpec
from .tables import PotentialTable

_SEPARATORS = set(" \t\r\n,#")


def _tokenize(text: str):
    """Yield (line_number, tokens) for every significant line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        yield lineno, line.split()


def _split_csv(token: str, lineno: int, what: str) -> list[str]:
    parts = token.split(",")
    if any(p == "" for p in parts):
        raise ParseError(lineno, f"empty entry in {what} list {token!r}")
    return parts


def parse_model(text: str) -> FactorGraph:
    """Parse a model file into a FactorGraph.

    Rejects malformed lines, factors over undeclared RVs, repeated names and
    wrong-cardinality tables, always with the offending line number.
    """
    rvs: list[RandomVariable] = []
    factors: list[Factor] = []
    rv_by_id: dict[str, RandomVariable] = {}
    factor_ids: set[str] = set()
    for lineno, tokens in _tokenize(text):
        kind = tokens[0]
        if kind == "rv":
            if len(tokens) != 3:
                raise ParseError(lineno, f"expected 'rv <name> <values>', got {len(tokens)} tokens")
            name = tokens[1]
            if name in rv_by_id or name in factor_ids:
                raise ParseError(lineno, f"duplicate node name {name!r}")
            values = _split_csv(tokens[2], lineno, "range")
            try:
                spec = RangeSpec(values)
            except ValueError as e:
                raise ParseError(lineno, str(e)) from None
            rv = RandomVariable(name, spec)
            rvs.append(rv)
            rv_by_id[name] = rv
        elif kind == "factor":
            if len(tokens) < 4:
                raise ParseError(lineno, "expected 'factor <name> known|unknown <args> [<entries>]'")
            name, state = tokens[1], tokens[2]
            if name in rv_by_id or name in factor_ids:
                raise ParseError(lineno, f"duplicate node name {name!r}")
            args = _split_csv(tokens[3], lineno, "argument")
            for a in args:
                if a not in rv_by_id:
                    raise ParseError(lineno, f"factor {name!r} references undeclared RV {a!r}")
            if len(set(args)) != len(args):
                raise ParseError(lineno, f"factor {name!r} repeats an argument")
            if state == "unknown":
                if len(tokens) != 4:
                    raise ParseError(lineno, "unknown factor takes no entries")
                factors.append(Factor(name, tuple(args)))
            elif state == "known":
                if len(tokens) != 5:
                    raise ParseError(lineno, "known factor needs exactly one entries list")
                shape = tuple(len(rv_by_id[a].range) for a in args)
                raw = _split_csv(tokens[4], lineno, "entries")
                if len(raw) != prod(shape):
                    raise ParseError(
                        lineno,
                        f"factor {name!r} needs {prod(shape)} entries for shape {shape}, got {len(raw)}",
                    )
                try:
                    entries = [float(x) for x in raw]
                except ValueError:
                    raise ParseError(lineno, f"factor {name!r} has a non-numeric entry") from None
                factors.append(Factor(name, tuple(args), PotentialTable(shape, entries)))
            else:
                raise ParseError(lineno, f"factor state must be 'known' or 'unknown', got {state!r}")
            factor_ids.add(name)
        else:
            raise ParseError(lineno, f"unrecognised directive {kind!r}")
    return FactorGraph(rvs, factors)


def _check_token(token: str, what: str) -> str:
    if token == "" or any(c in _SEPARATORS for c in token):
        raise ValueError(f"{what} {token!r} cannot be written to the text format")
    return token


def _fmt(x: float) -> str:
    return format(x, ".17g")


def serialize_model(fg: FactorGraph) -> str:
    """Render a FactorGraph in the model format (evidence is not part of it)."""
    lines: list[str] = []
    for rv in fg.rvs:
        _check_token(rv.id, "rv name")
        values = ",".join(_check_token(v, "range value") for v in rv.range.values)
        lines.append(f"rv {rv.id} {values}")
    for f in fg.factors:
        _check_token(f.id, "factor name")
        args = ",".join(_check_token(a, "argument") for a in f.args)
        if f.table is None:
            lines.append(f"factor {f.id} unknown {args}")
        else:
            entries = ",".join(_fmt(x) for x in f.table.entries)
            lines.append(f"factor {f.id} known {args} {entries}")
    return "\n".join(lines) + "\n"


def parse_evidence(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, tokens in _tokenize(text):
        if len(tokens) != 2:
            raise ParseError(lineno, "expected '<rv> <value>'")
        rv, value = tokens
        if rv in out and out[rv] != value:
            raise ParseError(lineno, f"conflicting evidence for {rv!r}")
        out[rv] = value
    return out


def serialize_evidence(evidence: Mapping[str, str]) -> str:
    lines = [
        f"{_check_token(rv, 'rv name')} {_check_token(value, 'value')}"
        for rv, value in sorted(evidence.items())
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_background(text: str) -> BackgroundKnowledge:
    groups: list[tuple[str, tuple[str, ...]]] = []
    seen: set[str] = set()
    for lineno, tokens in _tokenize(text):
        if len(tokens) != 3 or tokens[0] != "individual":
            raise ParseError(lineno, "expected 'individual <id> <factor>,...'")
        ind = tokens[1]
        if ind in seen:
            raise ParseError(lineno, f"duplicate individual {ind!r}")
        seen.add(ind)
        fids = _split_csv(tokens[2], lineno, "factor")
        groups.append((ind, tuple(sorted(set(fids)))))
    return BackgroundKnowledge(tuple(groups))


def serialize_background(bk: BackgroundKnowledge) -> str:
    lines = []
    for ind, fids in bk.groups:
        _check_token(ind, "individual id")
        lines.append(f"individual {ind} {','.join(_check_token(f, 'factor id') for f in fids)}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_queries(text: str) -> list[str]:
    out: list[str] = []
    for lineno, tokens in _tokenize(text):
        if len(tokens) != 1:
            raise ParseError(lineno, "expected one RV id per line")
        out.append(tokens[0])
    return out


def serialize_queries(queries: list[str]) -> str:
    lines = [_check_token(q, "rv name") for q in queries]
    return "\n".join(lines) + ("\n" if lines else "")
