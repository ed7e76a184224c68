"""Command-line front end. A thin client of the FastAPI service: every
command posts to the service and writes the response to disk. By default
the app is mounted in-process (no server needed); set MONOTUNE_SERVER_URL
to talk to a remote instance instead.

Exit codes: 0 success, 1 runtime failure, 2 invalid config.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from pathlib import Path

import click
import httpx

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _post_raw(endpoint: str, payload: dict) -> httpx.Response:
    url = os.environ.get("MONOTUNE_SERVER_URL")
    if url:
        with httpx.Client(base_url=url, timeout=None) as client:
            return client.post(endpoint, json=payload)

    # no server configured: mount the app in-process (ASGI transport is
    # async-only, so drive it through a short-lived event loop)
    import asyncio

    from .service import app

    async def call() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://monotune", timeout=None
        ) as client:
            return await client.post(endpoint, json=payload)

    return asyncio.run(call())


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        click.echo(f"config file not found: {path}", err=True)
        sys.exit(EXIT_CONFIG)
    except json.JSONDecodeError as exc:
        click.echo(f"config is not valid JSON: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _fail_from_response(resp: httpx.Response) -> None:
    """Print the failure (naming the first offending field for validation
    errors) and exit with the matching code."""
    if resp.status_code == 422:
        detail = resp.json().get("detail", [])
        if detail:
            first = detail[0]
            loc = ".".join(str(p) for p in first.get("loc", []) if p not in ("body",))
            click.echo(f"invalid config: {loc}: {first.get('msg', '')}", err=True)
        else:
            click.echo("invalid config", err=True)
        sys.exit(EXIT_CONFIG)
    if resp.status_code == 400:
        click.echo(f"invalid config: {resp.json().get('detail', '')}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"run failed: HTTP {resp.status_code}: {resp.text[:500]}", err=True)
    sys.exit(EXIT_RUNTIME)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _output_dir(config: dict) -> Path:
    override = os.environ.get("MONOTUNE_OUTPUT_DIR")
    return Path(override if override else config.get("output_dir", "."))


def _post(endpoint: str, payload: dict) -> dict:
    try:
        resp = _post_raw(endpoint, payload)
    except httpx.HTTPError as exc:
        click.echo(f"could not reach service: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    if resp.status_code != 200:
        _fail_from_response(resp)
    return resp.json()


def _jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


@click.group()
def main():
    """Hyperparameter tuning with directional-derivative sign observations."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def tune(config_path: str):
    """Run one tuning experiment; writes trials.jsonl and summary.json."""
    config = _load_config(config_path)
    result = _post("/tune", {"config": config})
    out = _output_dir(config)
    _atomic_write(out / "trials.jsonl", _jsonl(result["trials"]))
    _atomic_write(out / "summary.json", json.dumps(result["summary"], indent=2, sort_keys=True) + "\n")
    summary = result["summary"]
    click.echo(
        f"{summary['method']} on {summary['task']}: incumbent {summary['incumbent_y']} "
        f"at {summary['incumbent_x_raw']} "
        f"({summary['n_trials']} trials, {summary['total_budget_seconds']:.2f}s)"
    )
    if summary.get("heldout_error") is not None:
        click.echo(f"heldout error: {summary['heldout_error']:.4f}")


CSV_COLUMNS = ["method", "seed", "evals_to_1pct", "final_validation",
               "heldout_error", "budget_seconds"]


def _csv_cell(v) -> str:
    if v is None:
        return ""
    return str(v)


@main.command()
@click.option("--config-a", "config_a_path", required=True, type=click.Path())
@click.option("--config-b", "config_b_path", required=True, type=click.Path())
@click.option("--repeats", default=1, show_default=True, type=int)
def compare(config_a_path: str, config_b_path: str, repeats: int):
    """Budget-matched hypertune-vs-EI comparison over paired seeds;
    writes comparison.csv."""
    config_a = _load_config(config_a_path)
    config_b = _load_config(config_b_path)
    result = _post(
        "/compare",
        {"config_a": config_a, "config_b": config_b, "repeats": repeats},
    )
    lines = [",".join(CSV_COLUMNS)]
    for row in result["rows"] + result["summary_rows"]:
        lines.append(",".join(_csv_cell(row.get(c)) for c in CSV_COLUMNS))
    out = _output_dir(config_a)
    _atomic_write(out / "comparison.csv", "\n".join(lines) + "\n")
    for row in result["summary_rows"]:
        click.echo(
            f"{row['method']}: final_validation={row['final_validation']} "
            f"heldout_error={row['heldout_error']} evals_to_1pct={row['evals_to_1pct']}"
        )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
def validate(config_path: str):
    """Validate a config without running it; prints the normalized space."""
    config = _load_config(config_path)
    result = _post("/validate", {"config": config})
    click.echo(f"config ok: task={result['task']} method={result['method']} seed={result['seed']}")
    for d in result["normalized_space"]:
        sign = {1: "+1", -1: "-1", 0: "neutral"}[d["monotonicity"]]
        click.echo(
            f"  {d['name']}: bounds [{d['lower']}, {d['upper']}] "
            f"scale={d['scale']} sign={sign}"
        )


if __name__ == "__main__":
    main()
