"""Admin and analysis CLI.

Pack authoring, entropy reporting and KDF benchmarking run locally;
``import`` is a thin client that pushes a pack to a running service, and
``serve`` starts the HTTP service itself.
"""

from __future__ import annotations

import base64
import json
import sys
from pathlib import Path

import click

from . import analysis, attacks
from .config import KdfParams, load_service_config
from .kdf import bench_derive
from .pack import IMAGES_DIR, MANIFEST_NAME, generate_fixture, validate_pack


@click.group()
def main():
    """Cued-recognition authentication toolkit."""


@main.command()
@click.argument("pack_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--k", default=26, show_default=True, help="Keywords per portfolio.")
@click.option("--as-json", "as_json", is_flag=True, help="Machine-readable output.")
def validate(pack_dir, k, as_json):
    """Validate a portfolio pack directory."""
    diagnostics = validate_pack(pack_dir, k=k)
    if as_json:
        click.echo(json.dumps({"clean": not diagnostics, "diagnostics": diagnostics}))
    elif diagnostics:
        for line in diagnostics:
            click.echo(f"error: {line}")
    else:
        click.echo("pack is clean")
    sys.exit(1 if diagnostics else 0)


@main.command("entropy-report")
@click.option("--k", "ks", multiple=True, type=int, help="Keyword counts to tabulate.")
@click.option("--m", "ms", multiple=True, type=int, help="Sequence lengths to tabulate.")
@click.option("--min-bits", default=None, type=float, help="Only rows meeting this many bits.")
@click.option("--as-json", "as_json", is_flag=True)
def entropy_report(ks, ms, min_bits, as_json):
    """Tabulate entropy and online guess probability over a (k, m) grid."""
    rows = analysis.entropy_report(
        ks=ks or (2, 4, 9, 13, 20, 26), ms=ms or (1, 2, 3, 4, 5, 6)
    )
    if min_bits is not None:
        rows = [r for r in rows if r.bits >= min_bits]
    if as_json:
        click.echo(json.dumps([r.__dict__ for r in rows]))
    else:
        click.echo(analysis.format_report(rows))


@main.command("kdf-bench")
@click.option("--algorithm", default="scrypt", show_default=True,
              type=click.Choice(["scrypt", "pbkdf2-sha256"]))
@click.option("--cost", default=None, type=int,
              help="pbkdf2 iterations or scrypt log2(N); defaults per algorithm.")
@click.option("--rounds", default=5, show_default=True)
@click.option("--as-json", "as_json", is_flag=True)
def kdf_bench(algorithm, cost, rounds, as_json):
    """Measure derive-time distribution for a KDF parameter set."""
    if cost is None:
        cost = 15 if algorithm == "scrypt" else 200_000
    params = KdfParams(algorithm=algorithm, cost=cost)
    result = bench_derive(params, rounds=rounds)
    if as_json:
        click.echo(json.dumps(result))
    else:
        for key, value in result.items():
            click.echo(f"{key:>12}: {value}")


@main.command("generate-fixture")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--n", default=18, show_default=True, help="Number of portfolios.")
@click.option("--k", default=26, show_default=True, help="Keywords per portfolio.")
def generate_fixture_cmd(out_dir, seed, n, k):
    """Write a deterministic synthetic pack with placeholder cues."""
    path = generate_fixture(out_dir, seed=seed, n=n, k=k)
    click.echo(f"wrote fixture pack to {path}")


@main.command("import")
@click.argument("pack_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--admin-token", required=True, envvar="CUEDAUTH_ADMIN_TOKEN")
@click.option("--k", default=26, show_default=True)
def import_pack(pack_dir, url, admin_token, k):
    """Validate a pack locally, then push it to a running service."""
    import httpx

    pack_dir = Path(pack_dir)
    diagnostics = validate_pack(pack_dir, k=k)
    if diagnostics:
        for line in diagnostics:
            click.echo(f"error: {line}", err=True)
        sys.exit(1)
    images = [
        {
            "filename": path.name,
            "data_base64": base64.b64encode(path.read_bytes()).decode("ascii"),
        }
        for path in sorted((pack_dir / IMAGES_DIR).iterdir())
    ]
    body = {"manifest_yaml": (pack_dir / MANIFEST_NAME).read_text(), "images": images}
    response = httpx.post(
        f"{url}/admin/pack",
        json=body,
        headers={"X-Admin-Token": admin_token},
        timeout=60.0,
    )
    click.echo(f"{response.status_code}: {response.text}")
    sys.exit(0 if response.status_code == 201 else 1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Service config file (YAML).")
def serve(config_path):
    """Run the HTTP service."""
    import uvicorn

    from .service import build_app

    config = load_service_config(config_path)
    app = build_app(config)
    uvicorn.run(app, host=config.host, port=config.port)


@main.group()
def attack():
    """Attack-simulation harness."""


@attack.command("run")
@click.argument(
    "model",
    type=click.Choice(
        [
            "random-guesser",
            "guessing-campaign",
            "keylogger-replay",
            "screen-observer",
            "phishing",
            "feedback-probe",
        ]
    ),
)
@click.option("--profile", "profile_name", default="k4m2", show_default=True,
              type=click.Choice(sorted(attacks.PROFILES)))
@click.option("--trials", default=100_000, show_default=True, type=int)
@click.option("--seed", default=1, show_default=True, type=int)
@click.option("--observed-sessions", default=1, show_default=True, type=int)
@click.option("--observation", default="full", show_default=True,
              type=click.Choice(["full", "keys_only", "screen_only"]))
@click.option("--n", default=10, show_default=True, help="Portfolio count (phishing/probe).")
@click.option("--depth", default=2, show_default=True,
              help="Prefix length (phishing) or portfolios shown (probe).")
@click.option("--k", default=26, show_default=True, help="Keywords per portfolio (probe).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the JSON report here.")
def attack_run(model, profile_name, trials, seed, observed_sessions, observation,
               n, depth, k, out_path):
    """Run one attacker model and print its report."""
    profile = attacks.PROFILES[profile_name]
    if model == "random-guesser":
        report = attacks.simulate_random_guesser(profile, trials, seed)
        payload, text = report.to_dict(), report.format_text()
    elif model == "guessing-campaign":
        report = attacks.simulate_guessing_campaign(
            attacks.PROFILES["k4m2-lockout3"]
            if not profile.lockout.enabled
            else profile,
            trials,
            seed,
        )
        payload, text = report.to_dict(), report.format_text()
    elif model == "keylogger-replay":
        report = attacks.simulate_keylogger_replay(profile, observed_sessions, trials, seed)
        payload, text = report.to_dict(), report.format_text()
    elif model == "screen-observer":
        report = attacks.simulate_screen_observer(profile, trials, seed, observation)
        payload, text = report.to_dict(), report.format_text()
    elif model == "phishing":
        report = attacks.phishing_portfolio_guess(n, depth, trials, seed)
        payload, text = report.to_dict(), report.format_text()
    else:
        stats = attacks.feedback_leak_probe(n, depth, k, chains=max(trials // k, 1), seed=seed)
        payload = stats.to_dict()
        text = "\n".join(f"{key:<16} {value}" for key, value in payload.items())
    click.echo(text)
    if out_path:
        Path(out_path).write_text(json.dumps(payload, indent=2))
        click.echo(f"report written to {out_path}")


if __name__ == "__main__":
    main()
