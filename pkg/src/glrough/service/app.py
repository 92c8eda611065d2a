"""FastAPI service wrapping the algebra core.

Stateless except for an in-process cache of generator bases keyed by
(degree bound, labels); every result is a pure function of the request, so a
warm server only saves recomputation.  Package errors map to HTTP 400 with a
stable ``kind`` the CLI translates into exit codes.
"""

from __future__ import annotations

import functools
from fractions import Fraction
from typing import Any

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import freebasis, fourier, hopf, rde, roughpath, series, tensoriso, trees
from ..errors import DomainError, GlroughError, InvariantViolation
from . import models


@functools.lru_cache(maxsize=16)
def cached_basis(max_degree: int, labels: int) -> freebasis.GeneratorBasis:
    return freebasis.compute_generators(max_degree, labels)


def _num(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def _num_out(x):
    return str(x) if isinstance(x, Fraction) else float(x)


def _cov_matrix(cov) -> list[list]:
    return [[_num(x) for x in row] for row in cov]


def _series_response(s: series.ForestSeries) -> models.SeriesResponse:
    return models.SeriesResponse(series=series.format_series(s), data=s.to_json())


def _lift_payload(rp: roughpath.GridRoughPath) -> dict[str, Any]:
    return {
        "times": [_num_out(t) for t in rp.times],
        "p": str(rp.p),
        "increments": [series.format_series(s) for s in rp.steps],
    }


def _lift_from_payload(payload: dict[str, Any]) -> roughpath.GridRoughPath:
    try:
        times = [_num(t) for t in payload["times"]]
        p = _num(payload["p"])
        increments = [
            series.parse_series(text, truncation=int(Fraction(p)))
            for text in payload["increments"]
        ]
    except (KeyError, TypeError) as exc:
        raise InvariantViolation(f"bad lift payload: {exc}") from exc
    return roughpath.GridRoughPath(times, increments, p)


def _sig_payload(s: series.ForestSeries, level: int) -> dict[str, Any]:
    return {"level": level, "series": series.format_series(s)}


def create_app() -> FastAPI:
    app = FastAPI(
        title="glrough",
        description="Forest Hopf algebra, free generator bases, and the "
        "branched/geometric rough-path correspondence.",
        version="0.1.0",
    )

    @app.exception_handler(GlroughError)
    async def _package_error(request, exc: GlroughError):
        return JSONResponse(
            status_code=400,
            content={"error": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    # -- trees / hopf ---------------------------------------------------------

    @app.post("/trees/enumerate", response_model=models.TreesEnumResponse)
    def trees_enumerate(req: models.TreesEnumRequest):
        if req.forests:
            items = [trees.format_forest(f) for f in trees.enumerate_forests(req.nodes, req.labels)]
        else:
            items = [trees.format_tree(t) for t in trees.enumerate_trees(req.nodes, req.labels)]
        return models.TreesEnumResponse(items=items, count=len(items))

    @app.post("/hopf/star", response_model=models.SeriesResponse)
    def hopf_star(req: models.StarRequest):
        a = series.parse_series_or_forest(req.a, req.truncation)
        b = series.parse_series_or_forest(req.b, req.truncation)
        return _series_response(hopf.gl_product(a, b))

    @app.post("/hopf/coproduct", response_model=models.CoproductResponse)
    def hopf_coproduct(req: models.CoproductRequest):
        s = series.parse_series_or_forest(req.series)
        table = hopf.ck_coproduct_series(s) if req.kind == "ck" else hopf.gl_coproduct(s)
        terms = [
            models.CoproductTerm(
                left=trees.format_forest(l), right=trees.format_forest(r), coeff=str(c)
            )
            for (l, r), c in sorted(
                table.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1].sort_key())
            )
        ]
        return models.CoproductResponse(terms=terms)

    @app.post("/hopf/exp", response_model=models.SeriesResponse)
    def hopf_exp(req: models.ExpLogRequest):
        return _series_response(hopf.exp_star(series.parse_series_or_forest(req.series), req.level))

    @app.post("/hopf/log", response_model=models.SeriesResponse)
    def hopf_log(req: models.ExpLogRequest):
        return _series_response(hopf.log_star(series.parse_series_or_forest(req.series), req.level))

    # -- basis / rewrite -------------------------------------------------------

    @app.post("/basis/generate", response_model=models.BasisResponse)
    def basis_generate(req: models.BasisRequest):
        basis = cached_basis(req.max_degree, req.labels)
        import json as _json
        import tempfile
        from pathlib import Path

        # round through the canonical file serialization
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "basis.json"
            freebasis.save_basis(basis, path)
            payload = _json.loads(path.read_text())
        return models.BasisResponse(
            basis=payload,
            generator_count=basis.k_total,
            generators=[series.format_series(g) for g in basis.generators],
        )

    @app.post("/rewrite", response_model=models.RewriteResponse)
    def rewrite(req: models.RewriteRequest):
        basis = cached_basis(req.max_degree, req.labels)
        if req.direction == "words":
            if req.series is None:
                raise DomainError("rewriting to words needs a series")
            s = series.parse_series_or_forest(req.series)
            words = freebasis.rewrite_to_words(s, basis)
            return models.RewriteResponse(words=words.to_json())
        if req.words is None:
            raise DomainError("rewriting to forests needs a word payload")
        w = tensoriso.TensorSeries.from_json(req.words)
        return models.RewriteResponse(
            series=series.format_series(freebasis.rewrite_to_forests(w, basis))
        )

    # -- paths -----------------------------------------------------------------

    @app.post("/sim/bm", response_model=models.PathResponse)
    def sim_bm(req: models.SimBmRequest):
        cov = [[float(_num(x)) for x in row] for row in req.cov]
        path = roughpath.simulate_bm(req.dim, req.steps, cov, req.seed, req.t)
        return models.PathResponse(path=path.to_json())

    @app.post("/lift/ito", response_model=models.LiftResponse)
    def lift_ito(req: models.LiftRequest):
        path = roughpath.SamplePath.from_json(req.path)
        if req.rationalize_bits is not None:
            path = roughpath.rationalize_path(path, req.rationalize_bits)
        rp = roughpath.ito_lift(path, _num(req.p))
        return models.LiftResponse(lift=_lift_payload(rp))

    @app.post("/signature", response_model=models.SignatureResponse)
    def signature(req: models.SignatureRequest):
        rp = _lift_from_payload(req.lift)
        routes_agree = None
        if req.route in ("star", "both"):
            sig = roughpath.extend_signature(rp, req.level)
        if req.route in ("tensor", "both"):
            labels = req.labels or _max_label_of_lift(rp)
            basis = cached_basis(max(req.level, 2), labels)
            tens = roughpath.extend_signature_tensor(rp, req.level, basis)
            tsig = freebasis.rewrite_to_forests(tens, basis).retruncate(req.level)
            if req.route == "both":
                routes_agree = tsig == sig
            else:
                sig = tsig
        return models.SignatureResponse(
            sig=_sig_payload(sig, req.level), routes_agree=routes_agree
        )

    @app.post("/reverse", response_model=models.LiftResponse)
    def reverse_lift(req: models.ReverseRequest):
        rp = _lift_from_payload(req.lift)
        return models.LiftResponse(lift=_lift_payload(roughpath.reverse(rp)))

    # -- expected signatures -----------------------------------------------------

    @app.post("/esig/closed", response_model=models.SeriesResponse)
    def esig_closed(req: models.EsigClosedRequest):
        cov = _cov_matrix(req.cov)
        return _series_response(
            roughpath.esig_bm_closed_form(cov, _num(req.t), req.level)
        )

    @app.post("/esig/mc", response_model=models.EsigMcResponse)
    def esig_mc(req: models.EsigMcRequest):
        cov = _cov_matrix(req.cov)
        mean, stderr, meta = roughpath.esig_bm_monte_carlo(
            [[float(x) for x in row] for row in cov],
            float(_num(req.t)),
            req.level,
            req.samples,
            req.seed,
            steps=req.steps,
            workers=req.workers,
        )
        closed = max_z = within = None
        if req.compare_closed_form:
            cf = roughpath.esig_bm_closed_form(cov, _num(req.t), req.level)
            closed = cf.to_json()
            max_z = 0.0
            within = True
            for f in set(list(mean.terms) + list(cf.terms)):
                diff = abs(float(mean.coeff(f)) - float(cf.coeff(f)))
                se = stderr.get(f, 0.0)
                if se == 0.0:
                    within = within and diff == 0.0
                else:
                    max_z = max(max_z, diff / se)
            within = within and max_z <= 4.0
        return models.EsigMcResponse(
            series=mean.to_json(),
            stderr={trees.format_forest(f): v for f, v in stderr.items()},
            meta=meta,
            closed_form=closed,
            max_z=max_z,
            within_4se=within,
        )

    @app.post("/esig/bound", response_model=models.EsigBoundResponse)
    def esig_bound(req: models.EsigBoundRequest):
        cov = _cov_matrix(req.cov)
        d = len(cov)
        basis = cached_basis(2, d)
        exponent = roughpath.esig_bm_exponent(cov, _num(req.t))
        rows = roughpath.moment_bound_check(
            exponent, _num(req.K), req.k, basis, req.max_word_len
        )
        return models.EsigBoundResponse(
            rows=[
                models.EsigBoundRow(
                    word_length=r["word_length"],
                    term=str(r["term"]),
                    partial_sum=str(r["partial_sum"]),
                    ratio_to_previous=None
                    if r["ratio_to_previous"] is None
                    else str(r["ratio_to_previous"]),
                )
                for r in rows
            ]
        )

    # -- RDEs ---------------------------------------------------------------------

    @app.post("/rde/compare", response_model=models.RdeCompareResponse)
    def rde_compare(req: models.RdeCompareRequest):
        driver = roughpath.SamplePath.from_json(req.driver)
        if req.rationalize_bits is not None:
            driver = roughpath.rationalize_path(driver, req.rationalize_bits)
        fields = [rde.PolyVectorField.from_json(f) for f in req.fields_per_component]
        if len(fields) != driver.dim:
            raise DomainError(
                f"driver has {driver.dim} components, got {len(fields)} fields"
            )
        p = _num(req.p)
        rp = roughpath.ito_lift(driver, p)
        y0 = tuple(_num(x) for x in req.y0)
        basis = cached_basis(2, driver.dim)
        branched = rde.branched_euler_solve(rp, fields, y0)
        geometric = rde.geometric_euler_solve(
            roughpath.tensor_grid(rp, basis), fields, y0, basis
        )
        linear_ok = None
        if req.linear_level is not None:
            partial = rde.linear_group_rde(rp, req.linear_level)
            sig = roughpath.extend_signature(rp, req.linear_level)
            linear_ok = partial[-1] == sig

        def fmt(states):
            return [[str(x) for x in y] for y in states]

        return models.RdeCompareResponse(
            branched_final=[str(x) for x in branched[-1]],
            geometric_final=[str(x) for x in geometric[-1]],
            identical=branched == geometric,
            states_branched=fmt(branched),
            states_geometric=fmt(geometric),
            linear_rde_matches_signature=linear_ok,
        )

    # -- Fourier ---------------------------------------------------------------------

    def _parse_sigs(bundle: models.SigBundle) -> list[series.ForestSeries]:
        return [
            series.parse_series(text, truncation=bundle.level)
            for text in bundle.signatures
        ]

    @app.post("/fourier/eval", response_model=models.FourierEvalResponse)
    def fourier_eval(req: models.FourierEvalRequest):
        rep = fourier.Representation.from_json(req.rep)
        basis = cached_basis(req.max_degree or max(req.sigs.level, 2), req.labels)
        sigs = _parse_sigs(req.sigs)
        mean, se = fourier.char_function_with_se(sigs, rep, basis)
        return models.FourierEvalResponse(
            matrix=[[[float(x.real), float(x.imag)] for x in row] for row in mean],
            stderr=[[float(x) for x in row] for row in se],
        )

    @app.post("/fourier/compare", response_model=models.FourierCompareResponse)
    def fourier_compare(req: models.FourierCompareRequest):
        reps = [fourier.Representation.from_json(r) for r in req.reps]
        level = max(req.sigs_a.level, req.sigs_b.level, 2)
        basis = cached_basis(req.max_degree or level, req.labels)
        report = fourier.distinguish(
            _parse_sigs(req.sigs_a),
            _parse_sigs(req.sigs_b),
            reps,
            basis,
            z_threshold=req.threshold,
        )
        return models.FourierCompareResponse(report=report)

    # -- the worked example end to end -------------------------------------------------

    @app.post("/demo/section6", response_model=models.DemoResponse)
    def demo_section6(req: models.DemoRequest):
        report = run_section6_demo(
            seed=req.seed,
            samples=req.samples,
            steps=req.steps,
            mc_steps=req.mc_steps,
            workers=req.workers,
        )
        return models.DemoResponse(report=report, passed=report["passed"])

    return app


def _max_label_of_lift(rp: roughpath.GridRoughPath) -> int:
    out = 1
    for s in rp.steps:
        for f, _ in s:
            out = max(out, trees.max_label(f))
    return out


def run_section6_demo(
    seed: int,
    samples: int = 20000,
    steps: int = 64,
    mc_steps: int = 16,
    workers: int = 1,
) -> dict:
    """The semimartingale walkthrough: basic identity, generator count,
    the Ito/Stratonovich decomposition as an exact identity on a simulated
    path, closed-form vs Monte Carlo expected signature, and the moment
    bound partial sums."""
    d = 2
    basis = cached_basis(3, d)

    # star products of single-node trees
    identity_table = []
    for i in (1, 2):
        for j in (1, 2):
            prod = hopf.gl_product(
                series.ForestSeries.of_tree(trees.single(i)),
                series.ForestSeries.of_tree(trees.single(j)),
            )
            identity_table.append(
                {"left": str(i), "right": str(j), "product": series.format_series(prod)}
            )

    k_expected = d * (d + 3) // 2
    gens2 = [
        series.format_series(g) for g, deg in zip(basis.generators, basis.degrees) if deg <= 2
    ]
    k_ok = len(gens2) == k_expected

    # exact discrete Ito/Stratonovich identity on a rationalized path
    path = roughpath.rationalize_path(
        roughpath.simulate_bm(d, steps, [[1, 0], [0, 1]], seed=seed), 16
    )
    lift = roughpath.ito_lift(path, Fraction(5, 2))
    scaling = tensoriso.PiScaling.from_basis(basis, Fraction(5, 2))
    total = lift.increment(0, len(lift.steps))
    decomposition = roughpath.ito_stratonovich_increment(total, d, basis)
    image = tensoriso.psi(total, basis, scaling)
    conversion_exact = dict(decomposition.terms) == dict(image.terms)
    conversion_rows = [
        {"word": list(w), "coefficient": str(c)}
        for w, c in sorted(decomposition.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))
    ]

    # expected signature: closed form vs Monte Carlo at level 3
    cov = [[1, Fraction(1, 4)], [Fraction(1, 4), 1]]
    closed = roughpath.esig_bm_closed_form(cov, 1, 3)
    mean, stderr, meta = roughpath.esig_bm_monte_carlo(
        [[1.0, 0.25], [0.25, 1.0]], 1.0, 3, samples, seed, steps=mc_steps, workers=workers
    )
    esig_rows = []
    max_z = 0.0
    esig_ok = True
    for f in sorted(
        set(list(mean.terms) + list(closed.terms)), key=trees.Forest.sort_key
    ):
        diff = abs(float(mean.coeff(f)) - float(closed.coeff(f)))
        se = stderr.get(f, 0.0)
        if se == 0.0:
            ok = diff == 0.0
            z = 0.0 if ok else float("inf")
        else:
            z = diff / se
            ok = z <= 4.0
        max_z = max(max_z, z)
        esig_ok = esig_ok and ok
        esig_rows.append(
            {
                "forest": trees.format_forest(f),
                "closed_form": str(closed.coeff(f)),
                "monte_carlo": float(mean.coeff(f)),
                "stderr": se,
                "z": z,
            }
        )

    # moment bound partial sums for the one-dimensional closed form
    basis1 = cached_basis(2, 1)
    exponent = roughpath.esig_bm_exponent([[1]], 1)
    bound_rows = roughpath.moment_bound_check(exponent, 2, 2, basis1, 8)
    terms = [float(r["term"]) for r in bound_rows]
    two_step = [
        terms[i] / terms[i - 2] if terms[i - 2] else None for i in range(2, len(terms))
    ]
    tail = [r for r in two_step[2:] if r is not None]
    bound_ok = all(a > b for a, b in zip(tail, tail[1:])) and (tail[-1] < 0.75)

    passed = bool(k_ok and conversion_exact and esig_ok and bound_ok)
    return {
        "basic_identity": identity_table,
        "generators_degree_le_2": gens2,
        "k": {"expected": k_expected, "actual": len(gens2), "ok": k_ok},
        "conversion": {
            "steps": steps,
            "exact": conversion_exact,
            "total_increment_words": conversion_rows,
        },
        "expected_signature": {
            "rows": esig_rows,
            "max_z": max_z,
            "ok": esig_ok,
            "meta": meta,
        },
        "moment_bound": {
            "rows": [
                {
                    "word_length": r["word_length"],
                    "term": float(r["term"]),
                    "partial_sum": float(r["partial_sum"]),
                }
                for r in bound_rows
            ],
            "two_step_ratios": two_step,
            "ok": bound_ok,
        },
        "passed": passed,
    }
