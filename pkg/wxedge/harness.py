"""
Edge-case harness: the closed loop between the weather agent, the microsimulator
and the system under test, plus training, evaluation and replay.
"""

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, NamedTuple, Optional, Union

import numpy as np

from . import __version__
from .agent import (
    ACT_DIM,
    OBS_DIM,
    Adam,
    Agent,
    ClearAgent,
    PolicyAgent,
    PolicyParams,
    RandomAgent,
    RolloutBuffer,
    ScriptedAgent,
    featurize,
    load_checkpoint,
    ppo_update,
    save_checkpoint,
)
from .analysis import FailureAnalyzer, find_edge_case
from .catalog import catalog_sha256, select_test_subset
from .config import HarnessConfig, Settings, load_settings
from .errors import InvalidArgumentError, NonFiniteError, ReplayMismatchError
from .log import get_logger
from .models.common import all_finite
from .models.records import (
    AgentAggregate,
    AgentKind,
    EdgeCase,
    EpisodeRecord,
    EpisodeSummary,
    EpisodeTotals,
    EvaluationReport,
    TickRow,
)
from .models.rules import Realization, RuleState
from .models.scene import Scene, SceneCatalog
from .rng import stream
from .rulebook import Rulebook, mfd_deficit, rss_min_distance, step_reward
from .sim.perception import behavior_control, sense, visibility
from .sim.world import apply_action, initial_world, step

logger = get_logger(__name__)

REPLAY_TOLERANCE = 1e-9

CURVE_COLUMNS = (
    "update",
    "mean_reward",
    "mean_lambda_c",
    "mean_lambda_p",
    "surrogate",
    "value_loss",
    "approx_kl",
    "clip_fraction",
)

REPORT_COLUMNS = tuple(EpisodeSummary.model_fields)

# Script used when "scripted" is listed among the evaluation agents: fog driven up.
DEFAULT_SCRIPT = (1.0, 0.0, 0.0, 0.0, 0.0)


class TrainResult(NamedTuple):
    checkpoint: Path
    curve: Path
    manifest: Path
    updates: int


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_json(path: Path, data: Any) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def write_episode(record: EpisodeRecord, path: Union[str, Path]) -> None:
    """Stream an episode as JSON Lines: one line per tick, then a summary line."""
    episode_path = Path(path)
    episode_path.parent.mkdir(parents=True, exist_ok=True)
    with open(episode_path, "w") as f:
        for row in record.rows:
            f.write(json.dumps({"type": "tick", **row.model_dump(mode="json")}) + "\n")
        summary = record.model_dump(mode="json", exclude={"rows"})
        f.write(json.dumps({"type": "summary", **summary}) + "\n")


def read_episode(path: Union[str, Path]) -> EpisodeRecord:
    """Parse an episode JSONL file back into an EpisodeRecord."""
    episode_path = Path(path)
    if not episode_path.exists():
        raise InvalidArgumentError(f"Episode file not found: {episode_path}")

    rows: list[TickRow] = []
    summary: Optional[dict[str, Any]] = None
    with open(episode_path) as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                kind = entry.pop("type")
                if kind == "tick":
                    rows.append(TickRow(**entry))
                elif kind == "summary":
                    summary = entry
                else:
                    raise ValueError(f"unknown line type {kind!r}")
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise InvalidArgumentError(f"{episode_path}:{line_no}: {e}") from e

    if summary is None:
        raise InvalidArgumentError(f"{episode_path} has no summary line")
    try:
        return EpisodeRecord(rows=rows, **summary)
    except ValueError as e:
        raise InvalidArgumentError(f"{episode_path}: invalid summary: {e}") from e


def write_report_csv(summaries: list[EpisodeSummary], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(REPORT_COLUMNS)
        for summary in summaries:
            data = summary.model_dump(mode="json")
            writer.writerow([repr(v) if isinstance(v, float) else v for v in data.values()])


def read_report_csv(path: Union[str, Path]) -> list[EpisodeSummary]:
    with open(path, newline="") as f:
        return [
            EpisodeSummary(
                **{**row, "collided": row["collided"] == "True", "aborted": row["aborted"] == "True"}
            )
            for row in csv.DictReader(f)
        ]


class EdgeCaseHarness:
    """
    Runs episodes of the weather agent against the perception-driven ego.

    Example:
        harness = EdgeCaseHarness(HarnessConfig.load("configs/desk.json"))
        record = harness.run_episode(ClearAgent(), scene)
    """

    def __init__(
        self,
        config: Optional[HarnessConfig] = None,
        settings: Optional[Settings] = None,
    ):
        """
        Initialize the harness.

        Args:
            config: Harness configuration; defaults for every section when None
            settings: Process settings; a WXEDGE_MASTER_SEED overrides the config seeds
        """
        self.settings = settings or load_settings()
        self.config, self.seed_source = (config or HarnessConfig()).with_master_seed(
            self.settings
        )
        self.rulebook = Rulebook(self.config.rulebook.proximity_threshold)
        self.analyzer = FailureAnalyzer(
            failure_window=self.config.eval.failure_window,
            dropout_ticks=self.config.eval.dropout_ticks,
            a_dec_max=self.config.sim.a_dec_max,
        )

    # Episodes

    def _rollout(
        self,
        agent: Agent,
        scene: Scene,
        mode: str,
        rng: np.random.Generator,
        buffer: Optional[RolloutBuffer] = None,
    ) -> EpisodeRecord:
        cfg = self.config
        sim, perception, rules = cfg.sim, cfg.perception, cfg.rulebook
        weights = rules.weights
        last = cfg.ppo.episode_len - 1

        world = initial_world(scene, sim)
        vis = visibility(world.knobs, perception)
        det = sense(world, perception, stream("sense", scene.noise_seed, world.tick), vis)
        control = behavior_control(det, world.ego_speed, cfg.controller, sim)

        rows: list[TickRow] = []
        for t in range(cfg.ppo.episode_len):
            fs = featurize(world, det, vis, sim.v_cap)
            choice = agent.act(fs, rng)
            if not np.all(np.isfinite(choice.action)):
                raise NonFiniteError("agent action", f"tick {t}")

            knobs = apply_action(world.knobs, choice.action, sim.max_step_fraction, sim.frozen_knobs)
            prev_collided = world.collided
            world = step(world.model_copy(update={"knobs": knobs}), control, scene, sim)

            vis = visibility(world.knobs, perception)
            det = sense(world, perception, stream("sense", scene.noise_seed, world.tick), vis)
            control = behavior_control(det, world.ego_speed, cfg.controller, sim)

            rs = RuleState(
                ego_speed=world.ego_speed,
                gap=world.gap,
                collision_this_tick=world.collided and not prev_collided,
                lead_speed=world.lead_speed,
            )
            alpha_c, alpha_p, extra_terms = self.rulebook.step(rs)
            reward = step_reward(det.iou, alpha_c, alpha_p, weights)
            d_min = rss_min_distance(world.ego_speed, world.lead_speed, rules.rss_deceleration)
            deficit = mfd_deficit(world.gap, d_min)
            if not all_finite(world.gap, vis, reward, deficit, *extra_terms.values()):
                raise NonFiniteError("episode", f"tick {world.tick} of {scene.scene_id}")

            rows.append(
                TickRow(
                    tick=world.tick,
                    knobs=world.knobs.as_vector(),
                    gap=world.gap,
                    ego_speed=world.ego_speed,
                    lead_speed=world.lead_speed,
                    visibility=vis,
                    detected=det.detected,
                    iou=det.iou,
                    alpha_c=alpha_c,
                    alpha_p=alpha_p,
                    reward=reward,
                    deficit=deficit,
                    collision=rs.collision_this_tick,
                    lead_index=world.lead_index,
                    extra_terms=extra_terms,
                )
            )
            if buffer is not None:
                buffer.add(fs, choice.raw, choice.log_prob, reward, choice.value, t == last)

        record = EpisodeRecord(
            scene_id=scene.scene_id,
            agent=agent.name,
            mode=mode,
            rows=rows,
            totals=EpisodeTotals.from_rows(rows),
        )
        record.failure_mode = self.analyzer.classify(record)
        return record

    def run_episode(
        self,
        agent: Agent,
        scene: Scene,
        mode: str = "eval",
        rng: Optional[np.random.Generator] = None,
    ) -> EpisodeRecord:
        """
        Run one fixed-length episode.

        In eval mode a policy agent acts with its clamped mean. A non-finite
        value ends the episode early with an aborted record carrying the
        diagnostic.

        Args:
            agent: Knob-perturbing agent
            scene: Initial scene
            mode: "train" or "eval"
            rng: Agent stream; defaults to the eval stream for (agent, scene)

        Returns:
            The episode record
        """
        if isinstance(agent, PolicyAgent) and mode == "eval" and not agent.deterministic:
            agent = PolicyAgent(agent.params, deterministic=True)
        if rng is None:
            rng = stream("eval", self.config.eval.seed, agent.name, scene.scene_id)

        try:
            return self._rollout(agent, scene, mode, rng)
        except NonFiniteError as e:
            logger.warning("Aborted episode %s for %s: %s", scene.scene_id, agent.name, e)
            return EpisodeRecord(
                scene_id=scene.scene_id,
                agent=agent.name,
                mode=mode,
                aborted=True,
                diagnostic=str(e),
            )

    # Training

    def _manifest(self, command: str, started_at: str, **extra: Any) -> dict[str, Any]:
        return {
            "command": command,
            "wxedge_version": __version__,
            "seed_source": self.seed_source,
            "master_seed": self.settings.master_seed,
            "ppo_seed": self.config.ppo.seed,
            "eval_seed": self.config.eval.seed,
            "config": self.config.echo(),
            "started_at": started_at,
            "finished_at": _now(),
            **extra,
        }

    def train(
        self,
        catalog: SceneCatalog,
        out_dir: Union[str, Path],
        catalog_path: Optional[Union[str, Path]] = None,
        resume: Optional[Union[str, Path]] = None,
    ) -> TrainResult:
        """
        Train the PPO agent on scenes drawn uniformly from the catalog.

        Writes ``checkpoint.json`` after every update, ``training_curve.csv``
        and ``manifest.json``. Resuming continues the update index and appends
        to an existing curve in ``out_dir``.

        Raises:
            NonFiniteError: After writing a failure manifest; the checkpoint
                holds the last good parameters
        """
        started_at = _now()
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        checkpoint_path = out / "checkpoint.json"
        curve_path = out / "training_curve.csv"
        manifest_path = out / "manifest.json"

        ppo = self.config.ppo
        seed = ppo.seed
        if resume is not None:
            checkpoint = load_checkpoint(resume)
            params, optimizer, start = checkpoint.params, checkpoint.optimizer, checkpoint.update_index
            optimizer.learn_rate = ppo.learn_rate
            logger.info("Resuming from %s at update %d", resume, start)
        else:
            params = PolicyParams.initialize(
                stream("init", seed),
                obs_dim=OBS_DIM,
                act_dim=ACT_DIM,
                hidden_sizes=ppo.hidden_sizes,
                log_std_init=ppo.log_std_init,
            )
            optimizer = Adam(params.size, learn_rate=ppo.learn_rate)
            start = 0

        if ppo.num_updates == 0:
            raise InvalidArgumentError(
                f"total_steps {ppo.total_steps} is smaller than one update batch ({ppo.batch_size})"
            )

        append = resume is not None and curve_path.exists()
        buffer = RolloutBuffer(ppo.batch_size, OBS_DIM, ACT_DIM)
        catalog_hash = catalog_sha256(catalog_path) if catalog_path else None
        update = start

        with open(curve_path, "a" if append else "w", newline="") as f:
            writer = csv.writer(f)
            if not append:
                writer.writerow(CURVE_COLUMNS)

            try:
                for update in range(start, start + ppo.num_updates):
                    buffer.clear()
                    agent = PolicyAgent(params)
                    rewards, lambda_c, lambda_p = [], [], []
                    for k in range(ppo.episodes_per_update):
                        pick = stream("scene-draw", seed, update, k).integers(len(catalog))
                        scene = catalog.scenes[int(pick)]
                        record = self._rollout(
                            agent, scene, "train", stream("rollout", seed, update, k), buffer
                        )
                        rewards.append(record.totals.reward_sum)
                        lambda_c.append(record.totals.lambda_c)
                        lambda_p.append(record.totals.lambda_p)

                    params, stats = ppo_update(
                        params, buffer, ppo, stream("update", seed, update), optimizer
                    )
                    row = {
                        "update": update + 1,
                        "mean_reward": sum(rewards) / len(rewards),
                        "mean_lambda_c": sum(lambda_c) / len(lambda_c),
                        "mean_lambda_p": sum(lambda_p) / len(lambda_p),
                        "surrogate": stats.surrogate,
                        "value_loss": stats.value_loss,
                        "approx_kl": stats.approx_kl,
                        "clip_fraction": stats.clip_fraction,
                    }
                    writer.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])
                    f.flush()
                    save_checkpoint(checkpoint_path, params, optimizer, update + 1, ppo)
                    logger.info(
                        "Update %d: reward=%.3f lambda_c=%.3f lambda_p=%.3f kl=%.5f clip=%.3f",
                        update + 1,
                        row["mean_reward"],
                        row["mean_lambda_c"],
                        row["mean_lambda_p"],
                        stats.approx_kl,
                        stats.clip_fraction,
                    )
            except NonFiniteError as e:
                logger.error("Training halted at update %d: %s", update + 1, e)
                _write_json(
                    manifest_path,
                    self._manifest(
                        "train",
                        started_at,
                        status="failed",
                        diagnostic=str(e),
                        catalog=str(catalog_path) if catalog_path else None,
                        catalog_sha256=catalog_hash,
                        resumed_from=str(resume) if resume else None,
                        completed_updates=update,
                    ),
                )
                raise

        _write_json(
            manifest_path,
            self._manifest(
                "train",
                started_at,
                status="ok",
                catalog=str(catalog_path) if catalog_path else None,
                catalog_sha256=catalog_hash,
                resumed_from=str(resume) if resume else None,
                completed_updates=start + ppo.num_updates,
            ),
        )
        return TrainResult(checkpoint_path, curve_path, manifest_path, start + ppo.num_updates)

    # Evaluation

    def _build_agents(
        self, checkpoint: Optional[Union[str, Path]], agents: Optional[list[AgentKind]]
    ) -> list[Agent]:
        requested = agents is not None
        kinds = list(agents) if requested else list(self.config.eval.agents)
        if AgentKind.POLICY in kinds and checkpoint is None:
            if requested:
                raise InvalidArgumentError("The policy agent needs --checkpoint")
            kinds.remove(AgentKind.POLICY)

        built: list[Agent] = []
        for kind in kinds:
            if kind == AgentKind.CLEAR:
                built.append(ClearAgent())
            elif kind == AgentKind.RANDOM:
                built.append(RandomAgent())
            elif kind == AgentKind.SCRIPTED:
                built.append(ScriptedAgent(DEFAULT_SCRIPT))
            elif kind == AgentKind.POLICY:
                assert checkpoint is not None
                params = load_checkpoint(checkpoint).params
                built.append(PolicyAgent(params, deterministic=True))
        return built

    def evaluate(
        self,
        catalog: SceneCatalog,
        out_dir: Union[str, Path],
        catalog_path: Optional[Union[str, Path]] = None,
        checkpoint: Optional[Union[str, Path]] = None,
        agents: Optional[list[AgentKind]] = None,
    ) -> EvaluationReport:
        """
        Run every agent once over the fixed-seed test subset.

        Writes one JSONL file per episode under ``episodes/<agent>/``,
        ``report.json``, ``report.csv``, ``edge_cases.json`` and ``manifest.json``.

        Args:
            catalog: Scene catalog to draw the subset from
            out_dir: Output directory
            catalog_path: Catalog file, hashed into the report and manifest
            checkpoint: Policy checkpoint; without it the policy agent is skipped
            agents: Explicit agent list; overrides ``eval.agents``

        Raises:
            InvalidArgumentError: If the policy is requested without a checkpoint
                or the subset is larger than the catalog
        """
        started_at = _now()
        out = Path(out_dir)
        eval_cfg = self.config.eval

        built = self._build_agents(checkpoint, agents)
        subset = select_test_subset(catalog, eval_cfg.subset_size, eval_cfg.subset_seed)
        catalog_hash = catalog_sha256(catalog_path) if catalog_path else ""

        summaries: list[EpisodeSummary] = []
        edge_cases: list[EdgeCase] = []
        for agent in built:
            for scene in subset:
                record = self.run_episode(agent, scene, mode="eval")
                relative = f"episodes/{agent.name}/{scene.scene_id}.jsonl"
                write_episode(record, out / relative)
                summaries.append(EpisodeSummary.from_record(record))
                edge_case = find_edge_case(record, relative)
                if edge_case is not None:
                    edge_cases.append(edge_case)

        aggregates = self.analyzer.aggregate(summaries, [agent.name for agent in built])
        for aggregate in aggregates:
            logger.info(
                "%s: mean lambda_c=%.3f mean lambda_p=%.3f deficit=%.2f collisions=%d",
                aggregate.agent,
                aggregate.mean_lambda_c,
                aggregate.mean_lambda_p,
                aggregate.deficit_sum,
                aggregate.collisions,
            )

        report = EvaluationReport(
            catalog_sha256=catalog_hash,
            subset_seed=eval_cfg.subset_seed,
            scene_ids=[scene.scene_id for scene in subset],
            aggregates=aggregates,
            episodes=summaries,
        )
        _write_json(out / "report.json", report.model_dump(mode="json"))
        write_report_csv(summaries, out / "report.csv")
        _write_json(out / "edge_cases.json", [case.model_dump(mode="json") for case in edge_cases])
        _write_json(
            out / "manifest.json",
            self._manifest(
                "eval",
                started_at,
                status="ok",
                catalog=str(catalog_path) if catalog_path else None,
                catalog_sha256=catalog_hash,
                checkpoint=str(checkpoint) if checkpoint else None,
                agents=[agent.name for agent in built],
            ),
        )
        return report

    # Verification

    def replay(self, episode_file: Union[str, Path]) -> EpisodeTotals:
        """
        Re-verify an episode log: per-row terms and rewards against the rulebook,
        and the summary totals against the sums over rows.

        Raises:
            ReplayMismatchError: Listing every inconsistency found
        """
        record = read_episode(episode_file)
        rules = self.config.rulebook
        mismatches: list[str] = []

        def differs(a: float, b: float) -> bool:
            return not math.isclose(a, b, rel_tol=REPLAY_TOLERANCE, abs_tol=REPLAY_TOLERANCE)

        states = []
        for row in record.rows:
            rs = RuleState(
                ego_speed=row.ego_speed,
                gap=row.gap,
                collision_this_tick=row.collision,
                lead_speed=row.lead_speed,
            )
            states.append(rs)
            alpha_c, alpha_p, extra_terms = self.rulebook.step(rs)
            if differs(alpha_c, row.alpha_c) or differs(alpha_p, row.alpha_p):
                mismatches.append(f"tick {row.tick}: violation terms do not match the rulebook")
            for name, logged in row.extra_terms.items():
                if name in extra_terms and differs(extra_terms[name], logged):
                    mismatches.append(f"tick {row.tick}: {name} term does not match the rulebook")
            if differs(step_reward(row.iou, row.alpha_c, row.alpha_p, rules.weights), row.reward):
                mismatches.append(f"tick {row.tick}: reward does not match the logged terms")

        recomputed = EpisodeTotals.from_rows(record.rows)
        for field in EpisodeTotals.model_fields:
            logged, actual = getattr(record.totals, field), getattr(recomputed, field)
            if differs(logged, actual):
                mismatches.append(f"{field}: logged {logged!r}, rows sum to {actual!r}")

        if states:
            scores = self.rulebook.evaluate(Realization(states=states))
            if differs(scores.lambda_c, record.totals.lambda_c) or differs(
                scores.lambda_p, record.totals.lambda_p
            ):
                mismatches.append("rulebook scores of the logged realization differ from totals")

        if mismatches:
            raise ReplayMismatchError(mismatches)
        return recomputed


def load_report(in_dir: Union[str, Path]) -> tuple[EvaluationReport, list[AgentAggregate]]:
    """
    Load ``report.json`` and recompute its aggregates from ``report.csv``.

    Raises:
        InvalidArgumentError: If either file is missing or unreadable
        ReplayMismatchError: If the recomputed aggregates differ from the report
    """
    directory = Path(in_dir)
    report_path, csv_path = directory / "report.json", directory / "report.csv"
    for path in (report_path, csv_path):
        if not path.exists():
            raise InvalidArgumentError(f"Missing {path}")

    try:
        report = EvaluationReport.model_validate_json(report_path.read_text(encoding="utf-8"))
        summaries = read_report_csv(csv_path)
    except ValueError as e:
        raise InvalidArgumentError(f"Unreadable report in {directory}: {e}") from e

    analyzer = FailureAnalyzer()
    recomputed = analyzer.aggregate(summaries, [a.agent for a in report.aggregates])
    if recomputed != report.aggregates:
        raise ReplayMismatchError(["report aggregates differ from the per-episode table"])
    return report, recomputed
