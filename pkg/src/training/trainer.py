# src/training/trainer.py
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..autodiff import Tape, Tensor, dtype_for
from ..errors import ConfigurationError, NumericFaultError
from ..logger import logger
from ..metrics import ade, fde
from ..model import TrajectoryModel, loss_terms, nll, save_checkpoint
from ..schemas import ModelConfig, TrainConfig
from ..simulation import SceneSample
from ..utils import derive_seed
from .optimizer import AdamState, adamw_step, clip_global_norm, collect_grads

LOG_COLUMNS = ["step", "loss", "nll", "ade_term", "fde_term"]

# seed streams derived from TrainConfig.seed
_INIT_STREAM, _SHUFFLE_STREAM, _HOLDOUT_STREAM = 0, 1, 2


@dataclass
class TrainResult:
    model: TrajectoryModel
    checkpoint: Path
    history: pd.DataFrame
    evaluations: List[Dict[str, float]] = field(default_factory=list)
    train_ids: List[int] = field(default_factory=list)
    heldout_ids: List[int] = field(default_factory=list)
    faults: int = 0


def split_heldout(samples: Sequence[SceneSample], fraction: float, seed: int) -> Tuple[List[SceneSample], List[SceneSample]]:
    """Deterministic held-out split; at least one training scene always remains."""
    n = len(samples)
    order = np.random.default_rng(derive_seed(seed, _HOLDOUT_STREAM)).permutation(n)
    n_held = min(int(round(n * fraction)), n - 1)
    held = sorted(order[:n_held].tolist())
    held_set = set(held)
    return [samples[i] for i in range(n) if i not in held_set], [samples[i] for i in held]


def stack_batch(samples: Sequence[SceneSample], dtype) -> Tuple[np.ndarray, np.ndarray]:
    rasters = np.stack([s.raster for s in samples]).astype(dtype)
    futures = np.stack([s.future for s in samples]).astype(dtype)
    return rasters, futures


class BatchProducer:
    """
    Background thread filling a bounded queue with shuffled batches. The
    shuffle is a pure function of the seed, so consumption order is fixed.
    """
    _DONE = object()

    def __init__(self, samples: Sequence[SceneSample], batch_size: int, steps: int, seed: int, dtype, prefetch: int = 4):
        self.samples = samples
        self.batch_size = min(batch_size, len(samples))
        self.steps = steps
        self.seed = seed
        self.dtype = dtype
        self.queue: "queue.Queue" = queue.Queue(maxsize=prefetch)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="trajkit-batches", daemon=True)

    def _indices(self) -> Iterator[np.ndarray]:
        rng = np.random.default_rng(derive_seed(self.seed, _SHUFFLE_STREAM))
        n = len(self.samples)
        while True:
            perm = rng.permutation(n)
            for start in range(0, n - self.batch_size + 1, self.batch_size):
                yield perm[start:start + self.batch_size]

    def _offer(self, item) -> None:
        while not self._stop.is_set():
            try:
                self.queue.put(item, timeout=0.1)
                return
            except queue.Full:
                continue

    def _run(self) -> None:
        try:
            for _, idx in zip(range(self.steps), self._indices()):
                if self._stop.is_set():
                    return
                self._offer(stack_batch([self.samples[i] for i in idx], self.dtype))
        finally:
            self._offer(self._DONE)

    def __iter__(self):
        self._thread.start()
        while True:
            item = self.queue.get()
            if item is self._DONE:
                return
            yield item

    def close(self) -> None:
        self._stop.set()
        while True:
            try:
                self.queue.get_nowait()
            except queue.Empty:
                break
        if self._thread.ident is not None:
            self._thread.join(timeout=5.0)


def heldout_metrics(model: TrajectoryModel, samples: Sequence[SceneSample], batch_size: int = 64) -> Dict[str, float]:
    """Autoregressive mean-mode ADE/FDE and ground-truth NLL, averaged over scenes."""
    if not samples:
        return {"ade": float("nan"), "fde": float("nan"), "nll": float("nan")}
    ades, fdes, nlls = [], [], []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        rasters, futures = stack_batch(chunk, model.dtype)
        dist, path = model.predict(rasters, mode="mean")
        nlls.extend(nll(dist, futures).data.tolist())
        for pred, gt in zip(path.data, futures):
            ades.append(ade(pred, gt))
            fdes.append(fde(pred, gt))
    return {"ade": float(np.mean(ades)), "fde": float(np.mean(fdes)), "nll": float(np.mean(nlls))}


def _write_log(rows: List[Dict[str, float]], path: Optional[Path]) -> pd.DataFrame:
    frame = pd.DataFrame(rows, columns=LOG_COLUMNS)
    if path is not None:
        frame.to_csv(path, index=False)
    return frame


def train_step(model: TrajectoryModel, state: AdamState, cfg: TrainConfig, rasters: np.ndarray, futures: np.ndarray) -> Dict[str, float]:
    """Teacher-forced forward, backward, clipping and one AdamW update."""
    params = dict(model.named_parameters())
    gt = Tensor(futures)
    with Tape() as tape:
        dist, _ = model.decode(model.encode(Tensor(rasters)), mode="teacher_forced", ground_truth=gt)
        terms = loss_terms(dist, dist.mu, gt, model.cfg.loss_weights)
        tape.backward(terms.total)
    grads = clip_global_norm(collect_grads(params), cfg.clip_norm)
    adamw_step(params, grads, state, cfg)
    model.zero_grad()
    return terms.as_floats()


def train(
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    samples: Sequence[SceneSample],
    checkpoint_path=None,
    log_path=None,
) -> TrainResult:
    """
    Deterministic in (model_cfg, train_cfg, samples). Checkpoints every
    eval_every steps and at the end; a non-finite loss aborts the run and
    leaves the last good checkpoint on disk.
    """
    if not samples:
        raise ConfigurationError("Training needs a non-empty dataset")
    checkpoint_path = Path(checkpoint_path or train_cfg.checkpoint_path)
    log_path = Path(log_path) if log_path else checkpoint_path.with_suffix(".log.csv")
    shapes = {s.raster.shape for s in samples}
    expected = (model_cfg.channels, model_cfg.raster_size, model_cfg.raster_size)
    if shapes != {expected}:
        raise ConfigurationError("Dataset rasters do not match the model config", expected=expected, found=sorted(shapes))

    dtype = dtype_for(train_cfg.precision)
    model = TrajectoryModel(model_cfg, seed=derive_seed(train_cfg.seed, _INIT_STREAM), dtype=dtype)
    train_set, heldout = split_heldout(list(samples), train_cfg.holdout_fraction, train_cfg.seed)
    logger.info(
        f"[TRAINER] {model_cfg.label}: {model.num_parameters()} params, "
        f"{len(train_set)} train / {len(heldout)} held-out scenes, {train_cfg.steps} steps"
    )

    state = AdamState()
    rows: List[Dict[str, float]] = []
    evaluations: List[Dict[str, float]] = []

    def checkpoint(step: int) -> None:
        metrics = heldout_metrics(model.snapshot(), heldout)
        evaluations.append({"step": step, **metrics})
        save_checkpoint(model, checkpoint_path)
        logger.info(f"[TRAINER] step {step}: held-out ade={metrics['ade']:.4f} fde={metrics['fde']:.4f} nll={metrics['nll']:.4f}")

    producer = BatchProducer(train_set, train_cfg.batch_size, train_cfg.steps, train_cfg.seed, dtype, train_cfg.prefetch_batches)
    step = 0
    try:
        for rasters, futures in producer:
            step += 1
            try:
                values = train_step(model, state, train_cfg, rasters, futures)
            except NumericFaultError as e:
                logger.error(f"[TRAINER] Non-finite loss at step {step}; keeping last checkpoint {checkpoint_path}", exc_info=True)
                raise NumericFaultError("Training aborted on a non-finite loss", step=step, checkpoint=str(checkpoint_path)) from e
            if not np.isfinite(values["loss"]):
                raise NumericFaultError("Training aborted on a non-finite loss", step=step, checkpoint=str(checkpoint_path))
            rows.append({"step": step, **values})
            if step % train_cfg.eval_every == 0:
                _write_log(rows, log_path)
                checkpoint(step)
    finally:
        producer.close()
        history = _write_log(rows, log_path)

    if step == 0 or step % train_cfg.eval_every:
        checkpoint(step)
    return TrainResult(
        model=model,
        checkpoint=checkpoint_path,
        history=history,
        evaluations=evaluations,
        train_ids=[s.scene_id for s in train_set],
        heldout_ids=[s.scene_id for s in heldout],
        faults=state.faults,
    )
