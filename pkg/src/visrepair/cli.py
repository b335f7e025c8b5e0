"""Command-line client for the repair service.

By default commands drive the service in-process (no sockets, works fully
offline); ``--server`` points them at a running instance instead.  The
subcommands mirror the pipeline: ``run`` end to end, or ``mine`` /``repro``
/``localize`` /``gen`` /``validate`` one stage at a time against a shared
run directory.
"""

from __future__ import annotations

import json
import sys

import click
import httpx


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        response = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
        status, body = response.status_code, response
    else:
        import warnings

        with warnings.catch_warnings():
            # starlette nags about its test client's httpx backend; not actionable here
            warnings.simplefilter("ignore")
            from fastapi.testclient import TestClient

        from .service import app

        with TestClient(app, raise_server_exceptions=False) as client:
            response = client.post(path, json=payload)
            status, body = response.status_code, response
    try:
        doc = body.json()
    except Exception:
        doc = {"error": "BadResponse", "detail": body.text[:300]}
    if status != 200:
        detail = doc.get("detail") or doc
        raise click.ClickException(f"{doc.get('error', status)}: {detail}")
    return doc


_mode_option = click.option(
    "--mode",
    type=click.Choice(["live", "record", "replay"]),
    default="replay",
    show_default=True,
    help="where completions come from",
)
_variant_option = click.option(
    "--variant",
    type=click.Choice(["base", "i2c", "c2i", "full"]),
    default="full",
    show_default=True,
    help="ablation toggles for this run",
)
_server_option = click.option(
    "--server", default=None, help="base URL of a running service (default: in-process)"
)


@click.group()
def main() -> None:
    """Repair visual bugs: reproduce, localize, patch, re-render, pick."""


@main.command()
@click.option("--issue", required=True, type=click.Path(exists=True), help="issue record JSON")
@click.option("--repo", required=True, type=click.Path(exists=True), help="project tree to fix")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", default="runs", show_default=True, help="where run directories go")
@_mode_option
@_variant_option
@_server_option
def run(issue: str, repo: str, config_path: str, out: str, mode: str, variant: str, server: str | None) -> None:
    """Run the whole pipeline for one issue and print the result."""
    doc = _post(
        server,
        "/runs",
        {
            "issue_path": issue,
            "repo_path": repo,
            "config_path": config_path,
            "mode": mode,
            "variant": variant,
            "out_dir": out,
        },
    )
    click.echo(json.dumps(doc, indent=2))


def _init_if_needed(
    server: str | None,
    run_dir: str | None,
    issue: str | None,
    repo: str | None,
    config_path: str | None,
    out: str,
    mode: str,
    variant: str,
) -> str:
    if run_dir:
        return run_dir
    if not (issue and repo and config_path):
        raise click.ClickException("need --run, or --issue/--repo/--config to start one")
    doc = _post(
        server,
        "/runs/init",
        {
            "issue_path": issue,
            "repo_path": repo,
            "config_path": config_path,
            "mode": mode,
            "variant": variant,
            "out_dir": out,
        },
    )
    return doc["run_dir"]


def _stage_command(name: str, endpoint: str, help_text: str):
    @main.command(name=name, help=help_text)
    @click.option("--run", "run_dir", default=None, help="existing run directory")
    @click.option("--issue", type=click.Path(exists=True), default=None)
    @click.option("--repo", type=click.Path(exists=True), default=None)
    @click.option("--config", "config_path", type=click.Path(exists=True), default=None)
    @click.option("--out", default="runs", show_default=True)
    @_mode_option
    @_variant_option
    @_server_option
    def command(
        run_dir: str | None,
        issue: str | None,
        repo: str | None,
        config_path: str | None,
        out: str,
        mode: str,
        variant: str,
        server: str | None,
    ) -> None:
        target = _init_if_needed(server, run_dir, issue, repo, config_path, out, mode, variant)
        doc = _post(server, endpoint, {"run_dir": target})
        click.echo(json.dumps(doc, indent=2))

    return command


_stage_command("mine", "/stages/mine", "Mine documentation that explains the broken feature.")
_stage_command("repro", "/stages/repro", "Produce the reproduction script and host page.")
_stage_command("localize", "/stages/localize", "Locate suspicious files and faulty regions.")
_stage_command("gen", "/stages/generate", "Generate and deduplicate patch candidates.")
_stage_command("validate", "/stages/validate", "Render candidates and pick the winner.")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Serve the pipeline over HTTP."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
