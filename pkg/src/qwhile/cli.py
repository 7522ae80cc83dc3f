"""``qwhile`` command-line interface.

Exit codes: 0 success, 1 usage or I/O error, 2 parse/type error (including
malformed proof scripts), 3 verification reject or proof violation,
4 inconclusive result or loop non-convergence.
"""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from qwhile.config import DEFAULT_CONFIG, EvalConfig
from qwhile.errors import DimensionError, FormatError, ParseError, ProofScriptError, TypeCheckError
from qwhile.formats import dump_json, load_json, matrix_from_json, predicate_to_json, state_from_json, state_to_json
from qwhile.lang import load
from qwhile.lang.typecheck import TypedUnit
from qwhile.linalg import embed
from qwhile.predicates import QuantumPredicate, wlp, wp
from qwhile.semantics import DensityOperator, denote

EXIT_OK = 0
EXIT_IO = 1
EXIT_STATIC = 2
EXIT_REJECT = 3
EXIT_INCONCLUSIVE = 4


class _Failure(Exception):
    def __init__(self, code: int, kind: str, message: str, diagnostics=None):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.diagnostics = diagnostics or []


class _Cli(click.Group):
    """Group that maps click's usage errors to exit code 1."""

    def main(self, *args, standalone_mode=True, **kwargs):
        try:
            rv = super().main(*args, standalone_mode=False, **kwargs)
            code = rv if isinstance(rv, int) else EXIT_OK
        except click.ClickException as exc:
            exc.show()
            code = EXIT_IO
        except click.Abort:
            click.echo("Aborted!", err=True)
            code = EXIT_IO
        if standalone_mode:
            sys.exit(code)
        return code


def _config_options(fn):
    d = DEFAULT_CONFIG

    @click.option("--tol-psd", type=float, default=d.tol_psd, show_default=True, help="Löwner/PSD test tolerance.")
    @click.option("--tol-fix", type=float, default=d.tol_fix, show_default=True, help="Fixpoint step tolerance (max-norm).")
    @click.option("--tol-rank", type=float, default=d.tol_rank, show_default=True, help="Ranking residual tolerance.")
    @click.option("--tol-loop", type=float, default=d.tol_loop, show_default=True, help="Live loop mass cut-off.")
    @click.option("--max-iter", type=int, default=d.max_iter, show_default=True, help="Iteration cap for loops.")
    @click.option("--dim-cap", type=int, default=d.dim_cap, show_default=True, help="Largest global dimension.")
    @click.option("--json", "as_json", is_flag=True, help="Print a JSON report on stdout.")
    @functools.wraps(fn)
    def wrapper(tol_psd, tol_fix, tol_rank, tol_loop, max_iter, dim_cap, as_json, **kwargs):
        try:
            cfg = EvalConfig(tol_psd=tol_psd, tol_fix=tol_fix, tol_rank=tol_rank, tol_loop=tol_loop,
                             max_iter=max_iter, dim_cap=dim_cap)
        except ValueError as exc:
            raise click.BadParameter(str(exc)) from None
        ctx = click.get_current_context()
        try:
            code = fn(cfg=cfg, as_json=as_json, **kwargs)
        except _Failure as f:
            _emit_failure(f, as_json)
            code = f.code
        ctx.exit(code)

    return wrapper


def _emit(payload: dict, as_json: bool, lines: list[str]):
    if as_json:
        click.echo(dump_json(payload))
    else:
        for line in lines:
            click.echo(line)


def _emit_failure(f: _Failure, as_json: bool):
    if as_json:
        click.echo(dump_json({"error": {"kind": f.kind, "message": str(f), "diagnostics": f.diagnostics}}))
    else:
        click.echo(f"error: {f}", err=True)
        for d in f.diagnostics:
            where = f"{d['line']}:{d['col']}: " if "line" in d else ""
            click.echo(f"  {where}[{d['kind']}] {d['message']}", err=True)


# file loading

def _load_unit(path, cfg: EvalConfig) -> TypedUnit:
    try:
        return load(path, cfg)
    except OSError as exc:
        raise _Failure(EXIT_IO, "io", f"{path}: {exc.strerror or exc}") from None
    except ParseError as exc:
        raise _Failure(EXIT_STATIC, "syntax", f"{path}:{exc}",
                       [{"kind": "syntax", "message": exc.message, "line": exc.line, "col": exc.col}]) from None
    except TypeCheckError as exc:
        raise _Failure(EXIT_STATIC, "type", f"{path}: {len(exc.diagnostics)} type error(s)",
                       [d.to_json() for d in exc.diagnostics]) from None


def _read_json(path):
    try:
        return load_json(path)
    except OSError as exc:
        raise _Failure(EXIT_IO, "io", f"{path}: {exc.strerror or exc}") from None
    except FormatError as exc:
        raise _Failure(EXIT_IO, "format", str(exc)) from None


def _load_state(path, unit: TypedUnit) -> DensityOperator:
    obj = _read_json(path)
    try:
        if isinstance(obj, dict) and "shape" in obj:
            mat, shape = state_from_json(obj)
            if shape != unit.shape:
                raise DimensionError(f"state shape {shape.to_json()} does not match declarations {unit.shape.to_json()}")
        else:
            mat = matrix_from_json(obj)
        rho = DensityOperator(mat, unit.shape)
    except (FormatError, DimensionError) as exc:
        raise _Failure(EXIT_STATIC, "shape", f"{path}: {exc}") from None
    if not rho.is_valid():
        raise _Failure(EXIT_STATIC, "state", f"{path}: not a partial density operator")
    return rho


def _load_predicate(path, unit: TypedUnit, cfg: EvalConfig) -> QuantumPredicate:
    obj = _read_json(path)
    try:
        mat = matrix_from_json(obj)
        register = obj.get("register")
        if register is not None:
            mat = embed(mat, [str(r) for r in register], unit.shape, cfg.dim_cap)
        pred = QuantumPredicate(mat, unit.shape)
    except (FormatError, DimensionError) as exc:
        raise _Failure(EXIT_STATIC, "shape", f"{path}: {exc}") from None
    if not pred.is_valid(cfg.tol_psd):
        raise _Failure(EXIT_STATIC, "predicate", f"{path}: not a quantum predicate (needs 0 ⊑ P ⊑ I)")
    return pred


def _write(obj, path):
    try:
        dump_json(obj, path)
    except OSError as exc:
        raise _Failure(EXIT_IO, "io", f"{path}: {exc.strerror or exc}") from None


# commands

@click.group(cls=_Cli)
@click.version_option(package_name="artifact", prog_name="qwhile")
def cli():
    """Semantics, weakest preconditions and proof checking for quantum while-programs."""


@cli.command("check")
@click.argument("program")
@click.option("--state", "state_path", default=None, help="Also check that a state file fits the declarations.")
@_config_options
def cmd_check(program, state_path, cfg, as_json):
    """Parse and typecheck PROGRAM."""
    unit = _load_unit(program, cfg)
    src = unit.source
    payload = {
        "ok": True,
        "dimension": unit.shape.total_dim,
        "variables": [{"name": v.name, "type": "bool" if v.kind == "bool" else f"int[{v.dim}]", "dim": v.dim}
                      for v in src.variables],
        "gates": [g.name for g in src.gates],
        "measurements": [{"name": m.name, "outcomes": list(m.outcomes)} for m in src.measurements],
        "diagnostics": [],
    }
    if state_path is not None:
        rho = _load_state(state_path, unit)
        payload["state_trace"] = rho.trace
    lines = [f"ok: {len(src.variables)} variable(s), {len(src.gates)} gate(s), "
             f"{len(src.measurements)} measurement(s); dimension {unit.shape.total_dim}"]
    _emit(payload, as_json, lines)
    return EXIT_OK


@cli.command("run")
@click.argument("program")
@click.argument("state")
@click.option("-o", "--output", default=None, help="Write the output state here.")
@_config_options
def cmd_run(program, state, output, cfg, as_json):
    """Apply the semantic function of PROGRAM to the state in STATE."""
    unit = _load_unit(program, cfg)
    rho = _load_state(state, unit)
    res = denote(unit.main, rho, cfg)
    out = res.state
    p_term = min(max(out.trace, 0.0), 1.0)
    p_div = min(max(rho.trace - out.trace - res.residual, 0.0), 1.0)
    if output is not None:
        _write(state_to_json(out.matrix, unit.shape), output)
    payload = {
        "trace": out.trace,
        "termination_probability": p_term,
        "residual": res.residual,
        "divergence_lower_bound": p_div,
        "output": output,
        "stats": res.stats.to_json(),
    }
    lines = [f"trace: {out.trace!r}", f"termination probability: {p_term!r}",
             f"residual: {res.residual!r}", f"divergence lower bound: {p_div!r}"]
    if res.stats.plateaus:
        lines.append(f"live mass stuck in {res.stats.plateaus} loop evaluation(s): {res.stats.plateau_mass!r}")
    if output:
        lines.append(f"output state written to {output}")
    _emit(payload, as_json, lines)
    return EXIT_INCONCLUSIVE if res.stats.capped else EXIT_OK


def _transformer(program, post, output, cfg, as_json, liberal: bool):
    unit = _load_unit(program, cfg)
    p = _load_predicate(post, unit, cfg)
    res = (wlp if liberal else wp)(unit.main, p, cfg)
    if output is not None:
        _write(predicate_to_json(res.matrix), output)
    rep = res.report.to_json()
    payload = {"transformer": "wlp" if liberal else "wp", "output": output, "report": rep,
               "predicate": predicate_to_json(res.matrix)}
    name = "wlp" if liberal else "wp"
    lines = [f"{name}: {'converged' if rep['converged'] else 'NOT converged'}; "
             f"{rep['loops_evaluated']} loop evaluation(s), {rep['iterations']} iteration(s)"]
    if output:
        lines.append(f"predicate written to {output}")
    else:
        lines.append(np.array2string(np.real_if_close(res.matrix), precision=6, suppress_small=True))
    _emit(payload, as_json, lines)
    return EXIT_OK if rep["converged"] else EXIT_INCONCLUSIVE


@cli.command("wp")
@click.argument("program")
@click.argument("post")
@click.option("-o", "--output", default=None, help="Write the predicate here.")
@_config_options
def cmd_wp(program, post, output, cfg, as_json):
    """Weakest precondition of PROGRAM for the predicate in POST."""
    return _transformer(program, post, output, cfg, as_json, liberal=False)


@cli.command("wlp")
@click.argument("program")
@click.argument("post")
@click.option("-o", "--output", default=None, help="Write the predicate here.")
@_config_options
def cmd_wlp(program, post, output, cfg, as_json):
    """Weakest liberal precondition of PROGRAM for the predicate in POST."""
    return _transformer(program, post, output, cfg, as_json, liberal=True)


@cli.command("verify")
@click.argument("program")
@click.argument("pre")
@click.argument("post")
@click.option("--mode", type=click.Choice(["total", "partial"]), default="total", show_default=True)
@click.option("--witness", "witness_path", default=None, help="On reject, write the witness state here.")
@_config_options
def cmd_verify(program, pre, post, mode, witness_path, cfg, as_json):
    """Check the triple {PRE} PROGRAM {POST}."""
    from qwhile.verify import REJECT, Triple, check_partial, check_total

    unit = _load_unit(program, cfg)
    t = Triple(_load_predicate(pre, unit, cfg), unit.main, _load_predicate(post, unit, cfg))
    v = (check_total if mode == "total" else check_partial)(t, cfg)
    if witness_path is not None and v.witness is not None:
        _write(state_to_json(v.witness.matrix, unit.shape), witness_path)
    payload = v.to_json()
    payload["witness_path"] = witness_path if v.witness is not None else None
    lines = [f"{v.verdict} ({mode} correctness), margin {v.margin:.6g}"]
    if v.witness is not None and witness_path:
        lines.append(f"witness written to {witness_path}")
    _emit(payload, as_json, lines)
    return {"accept": EXIT_OK, REJECT: EXIT_REJECT}.get(v.verdict, EXIT_INCONCLUSIVE)


@cli.command("prove")
@click.argument("program")
@click.argument("proof")
@click.option("-o", "--output", default=None, help="Write the certificate here.")
@_config_options
def cmd_prove(program, proof, output, cfg, as_json):
    """Check the proof script PROOF against PROGRAM."""
    from qwhile.proofcheck import check_script, load_script

    unit = _load_unit(program, cfg)
    try:
        script = load_script(proof)
        cert = check_script(script, unit, None, cfg)
    except ProofScriptError as exc:
        if not Path(proof).exists():
            raise _Failure(EXIT_IO, "io", f"{proof}: no such file") from None
        raise _Failure(EXIT_STATIC, "proof", f"{proof}: {exc}") from None
    if output is not None:
        _write(cert.to_json(), output)
    lines = [f"{cert.status}: {len(cert.results)} step(s) checked ({cert.mode} mode)"]
    if cert.failure is not None:
        lines.append(cert.failure.message)
    _emit(cert.to_json(), as_json, lines)
    return {"certified": EXIT_OK, "violation": EXIT_REJECT}.get(cert.status, EXIT_INCONCLUSIVE)


@cli.command("suggest")
@click.argument("program")
@click.argument("post")
@click.option("--mode", type=click.Choice(["partial", "total"]), default="partial", show_default=True)
@click.option("--pre", "pre_path", default=None, help="Finish with an Order step down to this precondition.")
@click.option("-o", "--output", default=None, help="Write the proof script here.")
@_config_options
def cmd_suggest(program, post, mode, pre_path, output, cfg, as_json):
    """Emit the wlp/wp-annotated proof skeleton of PROGRAM for POST."""
    from qwhile.proofcheck import suggest_wlp_annotations

    unit = _load_unit(program, cfg)
    q = _load_predicate(post, unit, cfg)
    pre = _load_predicate(pre_path, unit, cfg) if pre_path else None
    script = suggest_wlp_annotations(unit, q, cfg, mode, pre)
    if output is not None:
        _write(script.to_json(), output)
    lines = [f"{len(script.steps)} step(s), goal {script.goal}"]
    for sid, why in sorted(script.flagged.items()):
        lines.append(f"flagged {sid}: {why}")
    if output:
        lines.append(f"proof script written to {output}")
    if output is None:
        payload = script.to_json()
        lines.append(dump_json(payload))
    else:
        payload = {"output": output, "steps": len(script.steps), "flagged": dict(sorted(script.flagged.items()))}
    _emit(payload, as_json, lines)
    return EXIT_INCONCLUSIVE if script.flagged else EXIT_OK


def main(argv=None):
    return cli.main(args=argv, prog_name="qwhile")


if __name__ == "__main__":
    main()
