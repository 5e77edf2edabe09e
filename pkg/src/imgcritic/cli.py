"""Command-line interface: a thin client over the service endpoints.

Data goes to stdout (or the -o path); diagnostics go to stderr. Exit codes:
0 success, 1 validation/parse error, 2 I/O error. All subcommands are
deterministic for fixed inputs and seeds.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
import numpy as np

from . import __version__
from .client import ServiceClient, ServiceError, record_to_wire
from .core import Heatmap
from .formats import encode_hmf, load_manifest


def _emit(data: str, output: str | None):
    if output:
        Path(output).write_text(data)
    else:
        click.echo(data, nl=False)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _client(ctx) -> ServiceClient:
    return ServiceClient(base_url=ctx.obj.get("server"))


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    return Path(source).read_text()


@click.group(name="imgcritic")
@click.version_option(__version__)
@click.option(
    "--server",
    default=None,
    metavar="URL",
    help="Base URL of a running service; by default the app runs in-process.",
)
@click.pass_context
def cli(ctx, server):
    """Reward engine, metrics and demo harness for image flaw diagnosis."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@cli.command()
@click.option("--predictions", "pred_path", required=True, metavar="MANIFEST")
@click.option("--ground-truth", "gt_path", required=True, metavar="MANIFEST")
@click.option("--blank-threshold", default=0.0, show_default=True,
              help="Mass at or below this counts as a blank heatmap.")
@click.option("-o", "--output", default=None, metavar="PATH")
@click.pass_context
def reward(ctx, pred_path, gt_path, blank_threshold, output):
    """Per-record reward reports (grounding, score, heatmap, total)."""
    preds = load_manifest(pred_path)
    gts = load_manifest(gt_path)
    with _client(ctx) as client:
        reports = client.post(
            "/rewards/batch",
            {
                "predictions": [record_to_wire(r) for r in preds],
                "ground_truth": [record_to_wire(r) for r in gts],
                "blank_threshold": blank_threshold,
            },
        )
    _emit(_dump_json(reports), output)


def _metric_report_tsv(report: dict) -> str:
    # Column layout: all-data MSE, GT=0 MSE, then the GT>0 metrics per type.
    columns = ["mse_all", "mse_gt0", "cc", "kld", "sim", "nss", "auc_judd"]
    lines = ["type\t" + "\t".join(columns)]
    for kind in ("artifact", "misalignment"):
        block = report["heatmaps"][kind]
        cells = ["" if block[c] is None else repr(block[c]) for c in columns]
        lines.append(kind + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"


def emit_report(report: dict, format: str) -> str:
    if format == "json":
        return _dump_json(report)
    if format == "tsv":
        return _metric_report_tsv(report)
    raise ValueError(f"unknown report format {format!r}")


@cli.command()
@click.option("--predictions", "pred_path", required=True, metavar="MANIFEST")
@click.option("--ground-truth", "gt_path", required=True, metavar="MANIFEST")
@click.option("--fixation-threshold", default=0.0, show_default=True,
              help="Ground-truth intensity above which a pixel is a fixation.")
@click.option("--blank-threshold", default=0.0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "tsv"]), default="json",
              show_default=True)
@click.option("-o", "--output", default=None, metavar="PATH")
@click.pass_context
def metrics(ctx, pred_path, gt_path, fixation_threshold, blank_threshold, fmt, output):
    """Dataset metric report (score correlations; heatmap metrics split by
    blank vs highlighted ground truth). Set $IMGCRITIC_THREADS to
    parallelize per-record work server-side."""
    preds = load_manifest(pred_path)
    gts = load_manifest(gt_path)
    with _client(ctx) as client:
        report = client.post(
            "/metrics/evaluate",
            {
                "predictions": [record_to_wire(r) for r in preds],
                "ground_truth": [record_to_wire(r) for r in gts],
                "fixation_threshold": fixation_threshold,
                "blank_threshold": blank_threshold,
            },
        )
    _emit(emit_report(report, fmt), output)


@cli.command()
@click.argument("source", metavar="[FILE|-]", default="-")
@click.option("--strict", is_flag=True, help="Reject missing lines and out-of-range scores.")
@click.option("-o", "--output", default=None, metavar="PATH")
@click.pass_context
def parse(ctx, source, strict, output):
    """Parse a look-think-predict response into JSON."""
    text = _read_text(source)
    with _client(ctx) as client:
        parsed = client.post("/parse", {"text": text, "strict": strict})
    _emit(_dump_json(parsed), output)


def _parse_weights(raw: str) -> list[float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 4:
        raise ValueError(f"--weights needs 4 comma-separated values, got {len(parts)}")
    weights = [float(p) for p in parts]
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    total = sum(weights)
    if total <= 0:
        raise ValueError("weights must not all be zero")
    return [w / total for w in weights]


@cli.command()
@click.argument("source", metavar="[FILE|-]", default="-")
@click.option("--weights", default=None, metavar="A,B,C,D",
              help="Per-dimension weights (alignment, aesthetics, plausibility, "
                   "overall); normalized to sum 1. Default: uniform.")
@click.option("-o", "--output", default=None, metavar="PATH")
@click.pass_context
def select(ctx, source, weights, output):
    """Pick the best candidate from a JSON array of score objects."""
    candidates = json.loads(_read_text(source))
    payload = {"candidates": candidates}
    if weights is not None:
        payload["weights"] = _parse_weights(weights)
    with _client(ctx) as client:
        result = client.post("/select", payload)
    _emit(_dump_json(result), output)


def _parse_grid(raw: str) -> tuple[int, int]:
    try:
        w, h = raw.lower().split("x")
        width, height = int(w), int(h)
    except ValueError as exc:
        raise ValueError(f"--grid must look like 16x16, got {raw!r}") from exc
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be positive")
    return width, height


@cli.command("grpo-demo")
@click.option("--grid", default="16x16", show_default=True, metavar="WxH")
@click.option("--steps", default=2, show_default=True, help="Reverse-time steps T.")
@click.option("--group-size", default=8, show_default=True, help="Trajectories per group G.")
@click.option("--iterations", default=300, show_default=True, help="Optimizer steps K.")
@click.option("--learning-rate", default=8.0, show_default=True)
@click.option("--epsilon", default=0.2, show_default=True, help="Clip width.")
@click.option("--beta", default=0.0, show_default=True,
              help="Optional image-level KL pull toward the initial policy.")
@click.option("--sigma", default=0.4, show_default=True, help="Step noise scale.")
@click.option("--sigma-floor", default=1e-8, show_default=True,
              help="Advantage std floor.")
@click.option("--seed", default=0, show_default=True)
@click.option("--condition", default="region", show_default=True,
              type=click.Choice(["region", "uniform"]))
@click.option("--mode", default="dense", show_default=True,
              type=click.Choice(["dense", "image_only"]))
@click.option("--dump-x0", default=None, metavar="PATH",
              help="Write the final mean map as HMF (values clipped to [0, 1]).")
@click.option("-o", "--output", default=None, metavar="PATH",
              help="Write the full learning curve JSON here.")
@click.pass_context
def grpo_demo(ctx, grid, steps, group_size, iterations, learning_rate, epsilon, beta,
              sigma, sigma_floor, seed, condition, mode, dump_x0, output):
    """Train the toy flow policy and report the final region MSE."""
    width, height = _parse_grid(grid)
    with _client(ctx) as client:
        result = client.post(
            "/grpo/demo",
            {
                "width": width,
                "height": height,
                "num_steps": steps,
                "group_size": group_size,
                "iterations": iterations,
                "learning_rate": learning_rate,
                "epsilon": epsilon,
                "sigma": sigma,
                "sigma_floor": sigma_floor,
                "seed": seed,
                "condition": condition,
                "mode": mode,
                "kl_beta": beta,
            },
        )
    if output:
        Path(output).write_text(_dump_json({"curve": result["curve"]}))
    if dump_x0:
        mean_map = np.clip(np.asarray(result["final_mean_map"]), 0.0, 1.0)
        Path(dump_x0).write_bytes(encode_hmf(Heatmap(mean_map)))
    summary = {
        "mode": result["mode"],
        "condition": result["condition"],
        "iterations": iterations,
        "final_region_mse": result["final_region_mse"],
    }
    click.echo(_dump_json(summary), nl=False)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="info")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except ServiceError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1 if 400 <= exc.status_code < 500 else 2)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
