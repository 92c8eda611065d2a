"""Command-line client for the service.

By default requests run against an in-process application instance, so no
server is needed; ``--server URL`` targets a running instance instead
(start one with ``glrough serve``).  Artifacts are plain JSON files in the
workspace directory.

Exit codes: 0 success, 2 usage, 3 parse error, 4 invariant violation,
5 numerical-tolerance failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

EXIT_CODES = {"usage": 2, "parse": 3, "invariant": 4, "tolerance": 5}


class CliFailure(click.ClickException):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.exit_code = EXIT_CODES.get(kind, 1)


class Client:
    """HTTP client, in-process by default."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=3600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code == 422:
            raise CliFailure("usage", f"invalid request: {response.text}")
        body = response.json()
        if response.status_code != 200:
            err = (body or {}).get("error", {})
            raise CliFailure(err.get("kind", "usage"), err.get("message", response.text))
        return body


class Workspace:
    def __init__(self, root: Path, client: Client, as_json: bool, threads: int):
        self.root = root
        self.client = client
        self.as_json = as_json
        self.threads = threads

    def resolve(self, name: str | Path) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.root / p

    def read_json(self, name: str | Path) -> dict:
        p = self.resolve(name)
        try:
            return json.loads(p.read_text())
        except FileNotFoundError:
            raise CliFailure("usage", f"no such file: {p}")
        except json.JSONDecodeError as exc:
            raise CliFailure("parse", f"{p} is not valid JSON: {exc}")

    def write_json(self, name: str | Path, payload: dict) -> Path:
        p = self.resolve(name)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(payload, indent=1))
        return p

    def emit(self, payload: dict, human: str | None = None) -> None:
        if self.as_json or human is None:
            click.echo(json.dumps(payload, indent=1))
        else:
            click.echo(human)


pass_ws = click.make_pass_decorator(Workspace)


@click.group()
@click.option("--server", envvar="GLROUGH_SERVER", default=None, help="Remote service URL (default: in-process).")
@click.option("--workspace", type=click.Path(path_type=Path), default=Path("."), help="Artifact directory.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--threads", type=click.IntRange(min=1), default=1, help="Worker cap for sampling commands (results unchanged).")
@click.pass_context
def main(ctx, server, workspace, as_json, threads):
    """Forest Hopf algebra, free bases, rough-path lifts, and signatures."""
    ctx.obj = Workspace(workspace, Client(server), as_json, threads)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


# -- trees ---------------------------------------------------------------------


@main.group()
def trees():
    """Enumeration of canonical trees and forests."""


@trees.command("enum")
@click.option("--nodes", required=True, type=int)
@click.option("--labels", required=True, type=int)
@click.option("--forests", is_flag=True, help="Enumerate forests instead of trees.")
@pass_ws
def trees_enum(ws: Workspace, nodes, labels, forests):
    """List all canonical trees (or forests) with the given node count."""
    body = ws.client.post(
        "/trees/enumerate", {"nodes": nodes, "labels": labels, "forests": forests}
    )
    ws.emit(body, "\n".join(body["items"]) + f"\ncount: {body['count']}")


# -- hopf ----------------------------------------------------------------------


@main.group()
def hopf():
    """Products, coproducts, exp and log on forest series."""


@hopf.command()
@click.argument("a")
@click.argument("b")
@click.option("--truncation", type=int, default=None)
@pass_ws
def star(ws: Workspace, a, b, truncation):
    """Product of two series (forest text grammar)."""
    body = ws.client.post("/hopf/star", {"a": a, "b": b, "truncation": truncation})
    ws.emit(body, body["series"])


@hopf.command()
@click.argument("series")
@click.option("--kind", type=click.Choice(["ck", "gl"]), default="ck", show_default=True, help="Admissible-cut or unshuffle coproduct.")
@pass_ws
def cop(ws: Workspace, series, kind):
    """Coproduct of a series."""
    body = ws.client.post("/hopf/coproduct", {"series": series, "kind": kind})
    lines = [f"{t['coeff']} * ({t['left']}) (x) ({t['right']})" for t in body["terms"]]
    ws.emit(body, "\n".join(lines))


@hopf.command("exp")
@click.argument("series")
@click.option("--level", required=True, type=int)
@pass_ws
def hopf_exp(ws: Workspace, series, level):
    """exp under the product, truncated at LEVEL."""
    body = ws.client.post("/hopf/exp", {"series": series, "level": level})
    ws.emit(body, body["series"])


@hopf.command("log")
@click.argument("series")
@click.option("--level", required=True, type=int)
@pass_ws
def hopf_log(ws: Workspace, series, level):
    """log under the product, truncated at LEVEL."""
    body = ws.client.post("/hopf/log", {"series": series, "level": level})
    ws.emit(body, body["series"])


# -- basis / rewrite --------------------------------------------------------------


@main.group()
def basis():
    """Free generator bases."""


@basis.command("gen")
@click.option("--max-degree", required=True, type=int)
@click.option("--labels", required=True, type=int)
@click.option("--out", default="basis.json", show_default=True)
@pass_ws
def basis_gen(ws: Workspace, max_degree, labels, out):
    """Compute the generator basis and write basis.json."""
    body = ws.client.post("/basis/generate", {"max_degree": max_degree, "labels": labels})
    path = ws.write_json(out, body["basis"])
    human = (
        "\n".join(body["generators"])
        + f"\ngenerators: {body['generator_count']}\nwrote {path}"
    )
    ws.emit(body, human)


@main.command()
@click.option("--labels", required=True, type=int)
@click.option("--max-degree", required=True, type=int)
@click.option("--to-words", "series", default=None, help="Series to rewrite into generator words.")
@click.option("--to-forests", "words_file", default=None, help="Word-series JSON file to expand back.")
@pass_ws
def rewrite(ws: Workspace, labels, max_degree, series, words_file):
    """Change of basis between forests and generator words."""
    if (series is None) == (words_file is None):
        raise CliFailure("usage", "pass exactly one of --to-words / --to-forests")
    if series is not None:
        body = ws.client.post(
            "/rewrite",
            {"labels": labels, "max_degree": max_degree, "direction": "words", "series": series},
        )
        words = body["words"]
        lines = [
            f"{t['coeff']} * {tuple(t['word'])}" for t in words["terms"]
        ]
        ws.emit(body, "\n".join(lines) if lines else "0")
    else:
        payload = ws.read_json(words_file)
        body = ws.client.post(
            "/rewrite",
            {"labels": labels, "max_degree": max_degree, "direction": "forests", "words": payload},
        )
        ws.emit(body, body["series"])


# -- simulation and lifts -----------------------------------------------------------


def _parse_cov(text: str) -> list[list[str]]:
    rows = [row for row in text.split(";") if row.strip()]
    return [[x.strip() for x in row.split(",")] for row in rows]


@main.group()
def sim():
    """Sample-path simulation."""


@sim.command("bm")
@click.option("--dim", required=True, type=int)
@click.option("--steps", required=True, type=int)
@click.option("--cov", required=True, help="Row-major matrix, e.g. '1,0;0,1'.")
@click.option("--seed", required=True, type=int)
@click.option("--t", default=1.0, type=float, show_default=True)
@click.option("--out", default="path.json", show_default=True)
@pass_ws
def sim_bm(ws: Workspace, dim, steps, cov, seed, t, out):
    """Simulate Brownian motion and write path.json."""
    body = ws.client.post(
        "/sim/bm",
        {"dim": dim, "steps": steps, "cov": _parse_cov(cov), "seed": seed, "t": t},
    )
    path = ws.write_json(out, body["path"])
    ws.emit(body, f"wrote {path} ({steps} steps, d={dim}, seed={seed})")


@main.group()
def lift():
    """Rough-path lifts of sample paths."""


@lift.command("ito")
@click.option("--path", "path_file", default="path.json", show_default=True)
@click.option("--p", default="5/2", show_default=True)
@click.option("--rationalize-bits", type=int, default=None, help="Dyadic rounding for exact-arithmetic runs.")
@click.option("--out", default="lift.json", show_default=True)
@pass_ws
def lift_ito(ws: Workspace, path_file, p, rationalize_bits, out):
    """Level-2 lift of a sample path; writes lift.json."""
    payload = ws.read_json(path_file)
    body = ws.client.post(
        "/lift/ito", {"path": payload, "p": p, "rationalize_bits": rationalize_bits}
    )
    path = ws.write_json(out, body["lift"])
    ws.emit(body, f"wrote {path}")


@main.command()
@click.option("--lift", "lift_file", default="lift.json", show_default=True)
@click.option("--level", required=True, type=int)
@click.option("--route", type=click.Choice(["star", "tensor", "both"]), default="star", show_default=True)
@click.option("--out", default="sig.json", show_default=True)
@pass_ws
def sig(ws: Workspace, lift_file, level, route, out):
    """Extend a lift to its signature at LEVEL; writes sig.json."""
    payload = ws.read_json(lift_file)
    body = ws.client.post("/signature", {"lift": payload, "level": level, "route": route})
    path = ws.write_json(out, body["sig"])
    msg = f"wrote {path}"
    if body.get("routes_agree") is not None:
        msg += f"\nroutes agree: {body['routes_agree']}"
        if not body["routes_agree"]:
            raise CliFailure("tolerance", "star and tensor signature routes disagree")
    ws.emit(body, msg)


# -- expected signatures --------------------------------------------------------------


@main.group()
def esig():
    """Expected signatures of Brownian motion."""


@esig.command("closed")
@click.option("--cov", required=True)
@click.option("--t", default="1", show_default=True)
@click.option("--level", required=True, type=int)
@pass_ws
def esig_closed(ws: Workspace, cov, t, level):
    """Closed-form expected signature."""
    body = ws.client.post(
        "/esig/closed", {"cov": _parse_cov(cov), "t": t, "level": level}
    )
    ws.emit(body, body["series"])


@esig.command("mc")
@click.option("--cov", required=True)
@click.option("--t", default="1", show_default=True)
@click.option("--level", required=True, type=int)
@click.option("--samples", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--steps", default=32, type=int, show_default=True)
@pass_ws
def esig_mc(ws: Workspace, cov, t, level, samples, seed, steps):
    """Monte Carlo expected signature with standard errors."""
    body = ws.client.post(
        "/esig/mc",
        {
            "cov": _parse_cov(cov),
            "t": t,
            "level": level,
            "samples": samples,
            "seed": seed,
            "steps": steps,
            "workers": ws.threads,
        },
    )
    lines = [
        f"max |mc - closed| in stderr units: {body['max_z']:.3f}"
        if body.get("max_z") is not None
        else ""
    ]
    for term in body["series"]["terms"]:
        se = body["stderr"].get(term["forest"], 0.0)
        lines.append(f"{term['forest']}: {eval_frac(term['coeff']):+.6f} (se {se:.2e})")
    ws.emit(body, "\n".join(filter(None, lines)))
    if body.get("within_4se") is False:
        raise CliFailure("tolerance", "Monte Carlo mean outside 4 standard errors of the closed form")


def eval_frac(text: str) -> float:
    from fractions import Fraction

    return float(Fraction(text))


@esig.command("bound")
@click.option("--cov", required=True)
@click.option("--t", default="1", show_default=True)
@click.option("--big-k", "K", default="2", show_default=True, help="Seminorm weight K.")
@click.option("--k", default=2, type=int, show_default=True, help="Generator cutoff.")
@click.option("--max-word-len", default=8, type=int, show_default=True)
@pass_ws
def esig_bound(ws: Workspace, cov, t, K, k, max_word_len):
    """Seminorm partial sums of the closed-form expected signature."""
    body = ws.client.post(
        "/esig/bound",
        {"cov": _parse_cov(cov), "t": t, "K": K, "k": k, "max_word_len": max_word_len},
    )
    lines = ["len   term          partial sum   ratio"]
    for r in body["rows"]:
        ratio = "-" if r["ratio_to_previous"] is None else f"{eval_frac(r['ratio_to_previous']):.4f}"
        lines.append(
            f"{r['word_length']:>3}   {eval_frac(r['term']):<12.6g}  {eval_frac(r['partial_sum']):<12.6g}  {ratio}"
        )
    ws.emit(body, "\n".join(lines))


# -- RDE -----------------------------------------------------------------------------


@main.group()
def rde():
    """Rough differential equations."""


@rde.command("compare")
@click.option("--driver", default="path.json", show_default=True)
@click.option("--fields", "fields_files", multiple=True, required=True, help="fields.json per driving component (repeat d times).")
@click.option("--p", default="5/2", show_default=True)
@click.option("--y0", required=True, help="Comma-separated rationals, e.g. '1,-1/2'.")
@click.option("--rationalize-bits", type=int, default=16, show_default=True)
@click.option("--linear-level", type=int, default=None, help="Also check the linear group equation at this level.")
@pass_ws
def rde_compare(ws: Workspace, driver, fields_files, p, y0, rationalize_bits, linear_level):
    """Run the branched and word-level Euler schemes and compare them."""
    body = ws.client.post(
        "/rde/compare",
        {
            "driver": ws.read_json(driver),
            "fields_per_component": [ws.read_json(f) for f in fields_files],
            "p": p,
            "y0": [x.strip() for x in y0.split(",")],
            "rationalize_bits": rationalize_bits,
            "linear_level": linear_level,
        },
    )
    lines = [
        f"branched  final: {body['branched_final']}",
        f"geometric final: {body['geometric_final']}",
        f"identical: {body['identical']}",
    ]
    if body.get("linear_rde_matches_signature") is not None:
        lines.append(f"linear group RDE matches signature: {body['linear_rde_matches_signature']}")
    ws.emit(body, "\n".join(lines))
    if not body["identical"]:
        raise CliFailure("tolerance", "branched and geometric Euler solutions differ")


# -- Fourier -------------------------------------------------------------------------


@main.group()
def fourier():
    """Representation-valued Fourier transforms of signature samples."""


@fourier.command("eval")
@click.option("--rep", "rep_file", default="rep.json", show_default=True)
@click.option("--sigs", "sigs_file", default="sigs.json", show_default=True)
@click.option("--labels", required=True, type=int)
@pass_ws
def fourier_eval(ws: Workspace, rep_file, sigs_file, labels):
    """Mean unitary evaluation of a signature sample under a representation."""
    body = ws.client.post(
        "/fourier/eval",
        {"rep": ws.read_json(rep_file), "sigs": ws.read_json(sigs_file), "labels": labels},
    )
    lines = []
    for row, se_row in zip(body["matrix"], body["stderr"]):
        lines.append(
            "  ".join(
                f"{re:+.4f}{im:+.4f}j (se {se:.1e})" for (re, im), se in zip(row, se_row)
            )
        )
    ws.emit(body, "\n".join(lines))


@fourier.command("compare")
@click.option("--rep", "rep_files", multiple=True, required=True)
@click.option("--sigs-a", required=True)
@click.option("--sigs-b", required=True)
@click.option("--labels", required=True, type=int)
@click.option("--threshold", default=4.0, type=float, show_default=True)
@pass_ws
def fourier_compare(ws: Workspace, rep_files, sigs_a, sigs_b, labels, threshold):
    """Compare two signature samples through their Fourier transforms."""
    body = ws.client.post(
        "/fourier/compare",
        {
            "reps": [ws.read_json(f) for f in rep_files],
            "sigs_a": ws.read_json(sigs_a),
            "sigs_b": ws.read_json(sigs_b),
            "labels": labels,
            "threshold": threshold,
        },
    )
    rep_lines = [
        f"rep {r['representation']}: max z {r['max_z']:.2f} at entry {tuple(r['entry'])}"
        for r in body["report"]["representations"]
    ]
    ws.emit(body, "\n".join(rep_lines + [f"verdict: {body['report']['verdict']}"]))


# -- demo ----------------------------------------------------------------------------


@main.group()
def demo():
    """End-to-end walkthroughs."""


@demo.command("section6")
@click.option("--seed", required=True, type=int)
@click.option("--samples", default=20000, type=int, show_default=True)
@click.option("--steps", default=64, type=int, show_default=True)
@click.option("--out", default=None, help="Also write the full report JSON here.")
@pass_ws
def demo_section6(ws: Workspace, seed, samples, steps, out):
    """Semimartingale walkthrough: basic identity, generator count, the exact
    Ito/Stratonovich identity, expected-signature comparison, moment bound."""
    body = ws.client.post(
        "/demo/section6",
        {"seed": seed, "samples": samples, "steps": steps, "workers": ws.threads},
    )
    report = body["report"]
    lines = ["== basic identity =="]
    for row in report["basic_identity"]:
        lines.append(f"  {row['left']} * {row['right']} = {row['product']}")
    lines.append("== generator basis (degree <= 2) ==")
    lines.append("  " + ", ".join(report["generators_degree_le_2"]))
    k = report["k"]
    lines.append(f"  k = {k['actual']} (expected d(d+3)/2 = {k['expected']}): {'ok' if k['ok'] else 'FAIL'}")
    conv = report["conversion"]
    lines.append("== Ito -> Stratonovich decomposition ==")
    lines.append(
        f"  exact identity over {conv['steps']} steps: {'ok' if conv['exact'] else 'FAIL'}"
    )
    for row in conv["total_increment_words"][:8]:
        lines.append(f"    word {row['word']}: {row['coefficient']}")
    es = report["expected_signature"]
    lines.append("== expected signature (closed form vs Monte Carlo) ==")
    lines.append(f"  samples: {es['meta']['samples']}, max z: {es['max_z']:.3f}, ok: {es['ok']}")
    for row in es["rows"]:
        if row["closed_form"] != "0" or abs(row["monte_carlo"]) > 4 * row["stderr"]:
            lines.append(
                f"    {row['forest']:<10} closed {eval_frac(row['closed_form']):+.4f}  mc {row['monte_carlo']:+.4f}  z {row['z']:.2f}"
            )
    mb = report["moment_bound"]
    lines.append("== moment bound partial sums (d=1, K=2, k=2) ==")
    for row in mb["rows"]:
        lines.append(
            f"    len {row['word_length']}: term {row['term']:.5f}, partial {row['partial_sum']:.5f}"
        )
    lines.append(f"  two-step term ratios decay: {'ok' if mb['ok'] else 'FAIL'}")
    lines.append(f"== overall: {'PASS' if body['passed'] else 'FAIL'} ==")
    if out:
        ws.write_json(out, report)
        lines.append(f"wrote {ws.resolve(out)}")
    ws.emit(body, "\n".join(lines))
    if not body["passed"]:
        raise CliFailure("tolerance", "section 6 walkthrough checks failed")


if __name__ == "__main__":
    main()
