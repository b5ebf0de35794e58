"""Operator command line: serve, rollout, parity, train-q, bench.

Exit codes: 0 ok, 1 parity/assertion failure, 2 usage error, 3 network or
bind error.  The default port is 8888, overridable with ENVLINK_PORT.
"""

from __future__ import annotations

import logging
import sys

import click

from . import harness, qlearn, wire
from .envs import make_env
from .errors import (
    BindFailure,
    ConfigError,
    ConnectionLost,
    ConnectionRefused,
    EnvlinkError,
)
from .server import Server

EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NETWORK = 3


def _env_option(f):
    return click.option("--env", "env_spec", help="builtin env spec, e.g. gridworld:5x5:n1 or pendulum")(f)


def _fail_network(exc: EnvlinkError) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_NETWORK)


@click.group()
def main() -> None:
    """Multi-agent environments, in-process or served over TCP."""


@main.command()
@_env_option
@click.option("--bind", default="127.0.0.1", show_default=True)
@click.option("--port", default=None, type=int, help="listen port [default: 8888 or ENVLINK_PORT]")
@click.option("--barrier-timeout", default=30.0, show_default=True, help="seconds before an incomplete round aborts")
def serve(env_spec, bind, port, barrier_timeout):
    """Serve a builtin environment until interrupted."""
    if env_spec is None:
        raise click.UsageError("--env is required")
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    try:
        env = make_env(env_spec)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    if port is None:
        port = wire.default_port()
    try:
        server = Server(env, bind=bind, port=port, barrier_timeout=barrier_timeout)
    except BindFailure as exc:
        _fail_network(exc)
    click.echo(f"listening on {server.bind_address}:{server.port}", nl=True)
    sys.stdout.flush()
    try:
        while True:
            import time

            time.sleep(0.2)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        env.close()


@main.command()
@_env_option
@click.option("--connect", "connect_to", help="serve address host[:port] instead of a local env")
@click.option("--steps", required=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--policy", default="random", show_default=True, type=click.Choice(["random"]))
@click.option("--out", "out_path", default="-", show_default=True, help="JSONL output file, - for stdout")
def rollout(env_spec, connect_to, steps, seed, policy, out_path):
    """Run a seeded random-policy rollout; one JSON object per step."""
    if steps < 0:
        raise click.UsageError("--steps must be >= 0")
    if (env_spec is None) == (connect_to is None):
        raise click.UsageError("exactly one of --env or --connect is required")
    try:
        env = harness.open_env(env_spec, connect_to)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (ConnectionRefused, ConnectionLost) as exc:
        _fail_network(exc)
    try:
        if out_path == "-":
            harness.run_rollout(env, steps, seed, out=sys.stdout)
        else:
            with open(out_path, "w") as out:
                harness.run_rollout(env, steps, seed, out=out)
    except (ConnectionRefused, ConnectionLost) as exc:
        _fail_network(exc)
    finally:
        env.close()


@main.command()
@_env_option
@click.option("--steps", required=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def parity(env_spec, steps, seed):
    """Check local, in-process-served, and loopback-served runs are identical."""
    if env_spec is None:
        raise click.UsageError("--env is required")
    if steps < 1:
        raise click.UsageError("--steps must be >= 1")
    try:
        divergence = harness.run_parity(env_spec, steps, seed)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (ConnectionRefused, ConnectionLost, BindFailure) as exc:
        _fail_network(exc)
    if divergence is not None:
        click.echo(str(divergence), err=True)
        sys.exit(EXIT_FAILURE)
    click.echo(f"parity ok: {env_spec}, {steps} steps, seed {seed}")


@main.command("train-q")
@_env_option
@click.option("--connect", "connect_to", help="train against a served environment instead")
@click.option("--alpha", default=0.1, show_default=True)
@click.option("--gamma", default=0.99, show_default=True)
@click.option("--epsilon", default=0.1, show_default=True)
@click.option("--episodes", default=500, show_default=True, type=int)
@click.option("--eval-every", default=50, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_path", default="-", show_default=True, help="CSV output file, - for stdout")
def train_q(env_spec, connect_to, alpha, gamma, epsilon, episodes, eval_every, seed, out_path):
    """Train a tabular Q-learner on a gridworld; emit the learning curve."""
    if (env_spec is None) == (connect_to is None):
        raise click.UsageError("exactly one of --env or --connect is required")
    if env_spec is not None and not env_spec.startswith("gridworld"):
        raise click.UsageError("train-q supports gridworld environments only")
    try:
        config = qlearn.QLearnerConfig(
            alpha=alpha, gamma=gamma, epsilon=epsilon, episodes=episodes,
            eval_every=eval_every, seed=seed,
        )
        env = harness.open_env(env_spec, connect_to)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (ConnectionRefused, ConnectionLost) as exc:
        _fail_network(exc)
    try:
        curve = qlearn.train(env, config)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (ConnectionRefused, ConnectionLost) as exc:
        _fail_network(exc)
    finally:
        env.close()
    csv = qlearn.curve_to_csv(curve)
    if out_path == "-":
        sys.stdout.write(csv)
    else:
        with open(out_path, "w") as out:
            out.write(csv)


@main.command()
@click.option("--connect", "connect_to", required=True, help="serve address host[:port]")
@click.option("--steps", required=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def bench(connect_to, steps, seed):
    """Measure round throughput and latency against a served environment."""
    if steps < 1:
        raise click.UsageError("--steps must be >= 1")
    try:
        report = harness.run_bench(connect_to, steps, seed)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (ConnectionRefused, ConnectionLost) as exc:
        _fail_network(exc)
    click.echo(str(report))


if __name__ == "__main__":
    main()
