"""Command line interface: compile specifications, train options, plan
meta-policies, and run the experiment protocols."""

from __future__ import annotations

import json
import sys

import click

from . import harness, ltl
from .automata import DELIVERY_PARTITION, PropositionPartition, load_fsa, save_fsa
from .gridworld import make_env
from .options import (
    OptionTrainConfig,
    load_options,
    save_options,
    train_all_options,
)
from .planner import (
    EventModel,
    logical_value_iteration,
    logical_value_iteration_general,
)
from .translate import translate_cosafe_to_fsa


@click.group()
def main():
    """Logical options: task compilation, option learning, and planning."""


def _partition(props: str | None) -> PropositionPartition:
    if props is None:
        return DELIVERY_PARTITION
    doc = json.loads(props)
    return PropositionPartition(subgoals=tuple(doc["subgoals"]),
                                safety=tuple(doc.get("safety", ())),
                                events=tuple(doc.get("events", ())))


@main.command()
@click.option("--spec", required=True, help="Temporal logic formula text.")
@click.option("--props", default=None,
              help='JSON proposition classes, e.g. {"subgoals": ["a"], ...}.')
@click.option("--out", required=True, type=click.Path(), help="FSA JSON path.")
def compile(spec, props, out):
    """Compile a formula into a task automaton."""
    partition = _partition(props)
    split = ltl.split_spec(ltl.parse_ltl(spec), safety_props=partition.safety,
                           event_props=partition.events)
    fsa = translate_cosafe_to_fsa(split.liveness, partition)
    save_fsa(fsa, out)
    click.echo(f"{len(fsa.states)} states, {len(fsa.edges)} edges -> {out}")
    if split.safety_conjuncts:
        click.echo("safety conjuncts (not part of the automaton): "
                   + ", ".join(f"always not {p}"
                               for p in split.safety_conjuncts))


@main.command()
@click.option("--map", "map_name", required=True,
              help="Packaged map name or path.")
@click.option("--episodes", default=1600, show_default=True)
@click.option("--max-steps", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(),
              help="Option bundle JSON path.")
def train(map_name, episodes, max_steps, seed, out):
    """Train one option per subgoal on a map."""
    env = make_env(harness.resolve_map_text(map_name))
    cfg = OptionTrainConfig(episodes=episodes, max_steps=max_steps, seed=seed)
    options = train_all_options(env, cfg)
    save_options(options, out)
    click.echo(f"trained {len(options)} options -> {out}")


def _parse_events(text: str | None, env) -> EventModel:
    if text is None or text == "dist":
        return EventModel.bernoulli(env.event_probs)
    if text.startswith("fixed:"):
        assignment = {}
        for item in text[len("fixed:"):].split(","):
            name, _, value = item.partition("=")
            assignment[name] = bool(int(value))
        return EventModel.fixed_assignment(assignment)
    raise click.BadParameter("expected 'dist' or 'fixed:name=0,...'")


@main.command()
@click.option("--fsa", "fsa_path", required=True, type=click.Path(exists=True))
@click.option("--options", "options_path", required=True,
              type=click.Path(exists=True))
@click.option("--map", "map_name", required=True)
@click.option("--mode", type=click.Choice(["simple", "general"]),
              default="simple", show_default=True)
@click.option("--events", default=None,
              help="'dist' (map header probabilities) or 'fixed:can=0'.")
@click.option("--out", required=True, type=click.Path())
def plan(fsa_path, options_path, map_name, mode, events, out):
    """Compute a meta-policy over trained options."""
    env = make_env(harness.resolve_map_text(map_name))
    fsa = load_fsa(fsa_path)
    options = load_options(options_path)
    model = _parse_events(events, env)
    if mode == "simple":
        mp = logical_value_iteration(fsa, options, env, model)
    else:
        from .automata import trivial_safety_automaton
        mp = logical_value_iteration_general(
            fsa, trivial_safety_automaton(env.safety_costs), options, env,
            model)
    doc = {
        "fsa_states": list(mp.fsa_states),
        "option_names": list(mp.option_names),
        "mu": mp.mu.tolist(),
        "v": [[None if x != x or x == float("-inf") else x for x in row]
              for row in mp.v],
        "sweeps": mp.sweeps,
    }
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1)
    click.echo(f"converged in {mp.sweeps} sweeps -> {out}")


@main.group()
def experiment():
    """Run an experiment protocol and write metrics CSV."""


def _load_config(path):
    if path is None:
        return harness.ExperimentConfig()
    return harness.ExperimentConfig.load(path)


@experiment.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def satisfaction(config_path, out):
    """Learning curves for every method (reward vs environment steps)."""
    cfg = _load_config(config_path)
    rows = harness.run_satisfaction(cfg, progress=click.echo)
    harness.write_metrics(rows, out)
    click.echo(f"{len(rows)} rows -> {out}")


@experiment.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def composability(config_path, out):
    """Meta-policy retraining curves on fixed options."""
    cfg = _load_config(config_path)
    rows = harness.run_composability(cfg, progress=click.echo)
    harness.write_metrics(rows, out)
    click.echo(f"{len(rows)} rows -> {out}")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
def oracle(config_path):
    """Run the oracle self-checks; exit nonzero on any failure."""
    cfg = _load_config(config_path)
    report = harness.run_oracle_suite(cfg)
    failed = 0
    for name, ok, detail in report:
        status = "ok" if ok else "FAIL"
        click.echo(f"{status:4s} {name}" + (f" ({detail})" if detail else ""))
        failed += not ok
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
