"""Counterfactual generation.

The genetic engine keeps the fittest half of each generation and refills
the population with uniform-crossover offspring of that half, stopping once
the best fitness stalls. Objectives are pluggable; the two standard setups
are :data:`DEFAULT_FITNESS` (proximity + sparsity) and
:data:`LONGITUDINAL_FITNESS` (proximity + longitudinal distance).

:func:`run_random` is a cheap random-search baseline that perturbs growing
subsets of features until enough valid candidates turn up.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, InfeasibleConstraints, SchemaMismatch, TooFewParents
from .metrics import (
    LongitudinalConfig,
    NormalizationProfile,
    longitudinal_distances,
    proximities,
    sparsities,
)
from .models import Classifier
from .schema import Dataset, DiffMatrix, FeatureSchema

log = logging.getLogger(__name__)

PROXIMITY = "proximity"
SPARSITY = "sparsity"
LONGITUDINAL = "longitudinal"
OBJECTIVES = (PROXIMITY, SPARSITY, LONGITUDINAL)

HINGE = "hinge"
HARD = "hard"


@dataclass(frozen=True)
class Objective:
    kind: str
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.kind!r}; expected one of {OBJECTIVES}")
        if not self.weight > 0:
            raise ConfigError("objective weights must be positive")


@dataclass(frozen=True)
class FitnessConfig:
    """Weighted sum of objectives plus a validity rule.

    With ``validity="hinge"`` an invalid candidate pays
    ``hinge_weight * (distance of its probability to the threshold)``; with
    ``validity="hard"`` its fitness is infinite.
    """

    objectives: tuple[Objective, ...]
    validity: str = HINGE
    hinge_weight: float = 1000.0

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(self.objectives))
        if not self.objectives:
            raise ConfigError("at least one objective is required")
        if self.validity not in (HINGE, HARD):
            raise ConfigError(f"validity must be {HINGE!r} or {HARD!r}")
        if self.validity == HINGE and not self.hinge_weight > 0:
            raise ConfigError("hinge weight must be positive")

    @property
    def kinds(self) -> set[str]:
        return {o.kind for o in self.objectives}

    @property
    def weight_scale(self) -> float:
        return sum(o.weight for o in self.objectives)

    def scaled(self, c: float) -> "FitnessConfig":
        """Every weight, the hinge weight included, multiplied by ``c``."""
        return FitnessConfig(tuple(Objective(o.kind, o.weight * c) for o in self.objectives),
                             self.validity, self.hinge_weight * c)


DEFAULT_FITNESS = FitnessConfig((Objective(PROXIMITY), Objective(SPARSITY)))
LONGITUDINAL_FITNESS = FitnessConfig((Objective(PROXIMITY), Objective(LONGITUDINAL)))


@dataclass(frozen=True)
class ScoringContext:
    """Everything needed to score a candidate besides the subject itself."""

    model: Classifier
    cross_profile: NormalizationProfile
    diffs: Optional[DiffMatrix] = None
    long_profile: Optional[NormalizationProfile] = None
    long_config: LongitudinalConfig = LongitudinalConfig()

    @property
    def has_longitudinal(self) -> bool:
        return self.diffs is not None and self.long_profile is not None

    def longitudinal(self, x, E) -> np.ndarray:
        if not self.has_longitudinal:
            return np.full(len(E), np.nan)
        return longitudinal_distances(x, E, self.diffs, self.long_profile, self.long_config)


@dataclass(frozen=True)
class SearchConstraints:
    """Structural rules every emitted candidate obeys.

    ``ranges`` maps continuous feature indices to inclusive ``(lo, hi)``
    bounds, ``monotone`` maps indices to ``"nondecreasing"`` or
    ``"nonincreasing"`` relative to the subject, and ``integer`` lists
    continuous features sampled on the integer grid.
    """

    schema: FeatureSchema
    desired_class: int = 1
    frozen: frozenset = frozenset()
    ranges: dict = field(default_factory=dict)
    monotone: dict = field(default_factory=dict)
    integer: frozenset = frozenset()

    def __post_init__(self):
        if self.desired_class not in (0, 1):
            raise ConfigError("desired class must be 0 or 1")
        object.__setattr__(self, "frozen", frozenset(int(j) for j in self.frozen))
        object.__setattr__(self, "integer", frozenset(int(j) for j in self.integer))
        for j, (lo, hi) in self.ranges.items():
            if self.schema[j].is_categorical:
                raise ConfigError(f"range given for categorical feature {self.schema[j].name!r}")
            if not lo <= hi:
                raise InfeasibleConstraints(f"empty range for {self.schema[j].name!r}: [{lo}, {hi}]")

    @classmethod
    def from_data(cls, data: Dataset, desired_class: int = 1, frozen: Sequence[str] = (),
                  respect_immutable: bool = True, ranges: Optional[dict] = None,
                  monotone: Optional[dict] = None) -> "SearchConstraints":
        """Constraints with ranges and integer grids inferred from ``data``.

        ``frozen``, ``ranges`` and ``monotone`` take feature names. Immutable
        schema features are frozen unless ``respect_immutable`` is false.
        """
        schema = data.schema
        froz = {schema.index(n) for n in frozen}
        if respect_immutable:
            froz |= set(np.flatnonzero(schema.immutable_mask).tolist())
        rng_map, ints = {}, set()
        for j, spec in enumerate(schema):
            if spec.is_categorical:
                continue
            col = data.X[:, j]
            rng_map[j] = (float(col.min()), float(col.max()))
            if np.all(col == np.round(col)):
                ints.add(j)
        for name, (lo, hi) in (ranges or {}).items():
            rng_map[schema.index(name)] = (float(lo), float(hi))
        mono = {j: spec.monotone for j, spec in enumerate(schema) if spec.monotone != "none"}
        for name, direction in (monotone or {}).items():
            j = schema.index(name)
            if direction == "none":
                mono.pop(j, None)
            else:
                mono[j] = direction
        return cls(schema, desired_class, frozenset(froz), rng_map, mono, frozenset(ints))

    def domains(self, x) -> list:
        """Per-feature sampling domain for subject ``x``.

        ``None`` marks a frozen feature; continuous domains are ``(lo, hi)``
        tuples and categorical domains are arrays of allowed level indices.
        """
        x = self.schema.validate_vector(x)
        out = []
        for j, spec in enumerate(self.schema):
            direction = self.monotone.get(j, "none")
            if spec.is_categorical:
                levels = np.arange(len(spec.levels))
                if direction == "nondecreasing":
                    levels = levels[levels >= x[j]]
                elif direction == "nonincreasing":
                    levels = levels[levels <= x[j]]
                if j in self.frozen:
                    out.append(None)
                    continue
                out.append(levels.astype(float))
                continue
            lo, hi = self.ranges.get(j, (-math.inf, math.inf))
            if direction == "nondecreasing":
                lo = max(lo, x[j])
            elif direction == "nonincreasing":
                hi = min(hi, x[j])
            if j in self.integer:
                lo, hi = math.ceil(lo), math.floor(hi)
            if j in self.frozen:
                if not lo <= x[j] <= hi:
                    raise InfeasibleConstraints(
                        f"frozen feature {spec.name!r} lies outside its allowed range")
                out.append(None)
                continue
            if not lo <= hi or not (math.isfinite(lo) and math.isfinite(hi)):
                raise InfeasibleConstraints(f"no admissible values for {spec.name!r}")
            out.append((float(lo), float(hi)))
        return out

    def satisfied(self, x, E) -> np.ndarray:
        """Row mask of candidates obeying frozen, range and monotone rules."""
        x = np.asarray(x, dtype=float)
        E = np.atleast_2d(np.asarray(E, dtype=float))
        ok = np.ones(E.shape[0], dtype=bool)
        for j in self.frozen:
            ok &= E[:, j] == x[j]
        for j, (lo, hi) in self.ranges.items():
            if j not in self.frozen:
                ok &= (E[:, j] >= lo) & (E[:, j] <= hi)
        for j, direction in self.monotone.items():
            if direction == "nondecreasing":
                ok &= E[:, j] >= x[j]
            elif direction == "nonincreasing":
                ok &= E[:, j] <= x[j]
        return ok


def _in_domain(value, dom) -> bool:
    if isinstance(dom, tuple):
        return dom[0] <= value <= dom[1]
    return bool(np.any(dom == value))


def _draw_values(dom, count, is_int, rng) -> np.ndarray:
    if isinstance(dom, tuple):
        lo, hi = dom
        if is_int:
            return rng.integers(int(lo), int(hi) + 1, count).astype(float)
        return rng.uniform(lo, hi, count)
    return dom[rng.integers(0, len(dom), count)]


def _perturb(x, domains, resample, integer, rng) -> np.ndarray:
    """Copy ``x`` once per row of the boolean ``resample`` mask and redraw marked cells."""
    E = np.tile(x, (resample.shape[0], 1))
    for j, dom in enumerate(domains):
        rows = np.flatnonzero(resample[:, j])
        if dom is None or len(rows) == 0:
            continue
        E[rows, j] = _draw_values(dom, len(rows), j in integer, rng)
    return E


@dataclass
class Population:
    """Candidates with cached scores; ``fitness`` is ``None`` until evaluated."""

    candidates: np.ndarray
    proba: np.ndarray
    valid: np.ndarray
    fitness: Optional[np.ndarray] = None
    sparsity: Optional[np.ndarray] = None
    generation: int = 0

    def __len__(self):
        return self.candidates.shape[0]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    @property
    def all_invalid(self) -> bool:
        return self.n_valid == 0

    def take(self, idx) -> "Population":
        idx = np.asarray(idx, dtype=np.int64)
        pick = lambda a: None if a is None else a[idx]
        return Population(self.candidates[idx], self.proba[idx], self.valid[idx],
                          pick(self.fitness), pick(self.sparsity), self.generation)

    @staticmethod
    def concat(a: "Population", b: "Population") -> "Population":
        join = lambda u, v: None if u is None or v is None else np.concatenate([u, v])
        return Population(np.vstack([a.candidates, b.candidates]), np.concatenate([a.proba, b.proba]),
                          np.concatenate([a.valid, b.valid]), join(a.fitness, b.fitness),
                          join(a.sparsity, b.sparsity), max(a.generation, b.generation))


def _validity(model: Classifier, z: int, E):
    proba = model.predict_proba(np.atleast_2d(E))
    valid = (proba >= model.threshold) if z == 1 else (proba < model.threshold)
    return proba, valid


def initial_population(x, z: int, model: Classifier, constraints: SearchConstraints,
                       pop_size: int = 60, seed=0, p_mut: float = 0.3,
                       max_rounds: int = 20) -> Population:
    """Random perturbations of ``x``, rejection-sampled toward class ``z``.

    Every unfrozen feature is redrawn with probability ``p_mut`` (features
    whose current value falls outside their domain always are). Up to
    ``max_rounds`` batches are drawn; slots still empty afterwards go to the
    rejects with the highest probability of class ``z``.
    """
    if pop_size < 4 or pop_size % 2:
        raise ConfigError("pop_size must be even and at least 4")
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    domains = constraints.domains(x)
    d = len(x)
    movable = np.array([dom is not None for dom in domains])
    forced = np.array([dom is not None and not _in_domain(x[j], dom) for j, dom in enumerate(domains)])

    accepted, rejects = [], []
    for _ in range(max_rounds if movable.any() else 1):
        resample = (rng.random((pop_size, d)) < p_mut) & movable | forced
        E = _perturb(x, domains, resample, constraints.integer, rng)
        proba, valid = _validity(model, z, E)
        accepted.extend((E[i], proba[i], True) for i in np.flatnonzero(valid))
        rejects.extend((E[i], proba[i], False) for i in np.flatnonzero(~valid))
        if len(accepted) >= pop_size:
            break
    chosen = accepted[:pop_size]
    if len(chosen) < pop_size:
        desirability = np.array([p if z == 1 else 1.0 - p for _, p, _ in rejects])
        order = np.argsort(-desirability, kind="stable")
        chosen += [rejects[i] for i in order[:pop_size - len(chosen)]]
    pop = Population(np.array([c[0] for c in chosen]), np.array([c[1] for c in chosen]),
                     np.array([c[2] for c in chosen], dtype=bool))
    if pop.all_invalid:
        log.info("initial population holds no candidate of the desired class")
    return pop


def _hinge(proba, z, threshold):
    gap = threshold - proba if z == 1 else proba - threshold
    return np.maximum(0.0, gap)


def score_candidates(x, E, config: FitnessConfig, context: ScoringContext, z: int,
                     proba=None, valid=None, with_longitudinal: bool = False) -> dict:
    """All per-candidate scores for the rows of ``E``; lower fitness is fitter."""
    x = np.asarray(x, dtype=float)
    E = np.atleast_2d(np.asarray(E, dtype=float))
    if E.shape[1] != x.shape[0]:
        raise SchemaMismatch("candidate width differs from subject width")
    if proba is None:
        proba, valid = _validity(context.model, z, E)
    scores = {"proba": proba, "valid": valid,
              "proximity": proximities(x, E, context.cross_profile),
              "sparsity": sparsities(x, E)}
    if LONGITUDINAL in config.kinds and not context.has_longitudinal:
        raise ConfigError("the longitudinal objective needs observed differences")
    if LONGITUDINAL in config.kinds or with_longitudinal:
        scores["longitudinal"] = context.longitudinal(x, E)
    else:
        scores["longitudinal"] = np.full(E.shape[0], np.nan)
    total = np.zeros(E.shape[0])
    for obj in config.objectives:
        total = total + obj.weight * scores[obj.kind]
    if config.validity == HINGE:
        total = total + config.hinge_weight * _hinge(proba, z, context.model.threshold)
    else:
        total = np.where(valid, total, np.inf)
    scores["fitness"] = total
    return scores


def fitness(x, e, config: FitnessConfig, context: ScoringContext, z: int = 1) -> float:
    return float(score_candidates(x, e, config, context, z)["fitness"][0])


def evaluate(pop: Population, x, config: FitnessConfig, context: ScoringContext, z: int) -> Population:
    s = score_candidates(x, pop.candidates, config, context, z, pop.proba, pop.valid)
    return replace(pop, fitness=s["fitness"], sparsity=s["sparsity"])


def _fitness_order(fit, valid, sparsity) -> np.ndarray:
    idx = np.arange(len(fit))
    return np.lexsort((idx, sparsity, ~np.asarray(valid, dtype=bool), fit))


def _distinct_first(E, order) -> np.ndarray:
    seen, first, again = set(), [], []
    for i in order:
        key = E[i].tobytes()
        (again if key in seen else first).append(i)
        seen.add(key)
    return np.array(first + again, dtype=np.int64)


def select_fittest(pop: Population) -> Population:
    """Top half by fitness; ties go to valid, then sparser, then earlier candidates.

    Exact copies of a better-ranked candidate are ranked after every
    distinct candidate, which keeps the surviving half from collapsing onto
    a handful of vectors.
    """
    if pop.fitness is None:
        raise ConfigError("population must be evaluated before selection")
    order = _fitness_order(pop.fitness, pop.valid, pop.sparsity)
    order = _distinct_first(pop.candidates, order)
    return pop.take(order[:len(pop) // 2])


def mate(parents: Population, p_crossover_bias: float = 0.5, seed=None) -> np.ndarray:
    """Uniform crossover; returns one child per parent.

    Each child picks two distinct parents at random and takes every feature
    from the first with probability ``p_crossover_bias``.
    """
    P = parents.candidates if isinstance(parents, Population) else np.atleast_2d(parents)
    m = P.shape[0]
    if m < 2:
        raise TooFewParents(f"need at least 2 parents, got {m}")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, m, m)
    b = (a + rng.integers(1, m, m)) % m
    take_a = rng.random(P.shape) < p_crossover_bias
    return np.where(take_a, P[a], P[b])


def mutate(E, x, domains, integer, p_mutation: float = 0.0, p_revert: float = 0.0,
           seed=None) -> np.ndarray:
    """Perturb offspring in place of a copy.

    Each unfrozen cell is redrawn from its domain with probability
    ``p_mutation``; independently, each cell is reset to the subject's own
    value with probability ``p_revert``. Cells whose subject value lies
    outside the domain are never reset.
    """
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    movable = np.array([dom is not None for dom in domains])
    revertible = np.array([dom is not None and _in_domain(x[j], dom) for j, dom in enumerate(domains)])
    redraw = (rng.random(E.shape) < p_mutation) & movable
    reset = (rng.random(E.shape) < p_revert) & revertible
    out = np.array(E, dtype=float, copy=True)
    for j, dom in enumerate(domains):
        rows = np.flatnonzero(redraw[:, j])
        if len(rows):
            out[rows, j] = _draw_values(dom, len(rows), j in integer, rng)
    return np.where(reset, x, out)


@dataclass(frozen=True)
class GeneticParams:
    pop_size: int = 60
    max_generations: int = 200
    convergence_epsilon: float = 1e-4
    patience: int = 10
    k: int = 10
    p_mut: float = 0.3
    p_crossover_bias: float = 0.5
    p_mutation: float = 0.0
    p_revert: float = 0.1
    init_rounds: int = 20

    def __post_init__(self):
        if self.pop_size < 4 or self.pop_size % 2:
            raise ConfigError("pop_size must be even and at least 4")
        if not 1 <= self.k <= self.pop_size:
            raise ConfigError("k must lie in [1, pop_size]")
        if self.max_generations < 1 or self.patience < 1:
            raise ConfigError("max_generations and patience must be positive")
        for name in ("p_mut", "p_crossover_bias", "p_mutation", "p_revert"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")


@dataclass
class CounterfactualSet:
    """Candidates for one subject with their scores.

    ``fitness_rank`` records each candidate's position in the generator's
    own fitness ordering, so it survives re-ranking by another key.
    """

    x: np.ndarray
    candidates: np.ndarray
    valid: np.ndarray
    proximity: np.ndarray
    sparsity: np.ndarray
    longitudinal: np.ndarray
    fitness: np.ndarray
    method: str = "genetic"
    k_requested: int = 10
    subject_id: Optional[int] = None
    shortfall: bool = False
    duplicates: bool = False
    fitness_rank: Optional[np.ndarray] = None
    trace: tuple = ()

    def __post_init__(self):
        if self.fitness_rank is None:
            self.fitness_rank = np.arange(len(self.valid))

    def __len__(self):
        return len(self.valid)

    @property
    def n_valid(self) -> int:
        return int(np.sum(self.valid))

    def reorder(self, order) -> "CounterfactualSet":
        order = np.asarray(order, dtype=np.int64)
        return replace(self, candidates=self.candidates[order], valid=self.valid[order],
                       proximity=self.proximity[order], sparsity=self.sparsity[order],
                       longitudinal=self.longitudinal[order], fitness=self.fitness[order],
                       fitness_rank=self.fitness_rank[order])


def _build_set(x, E, scores, order, method, k, subject_id, shortfall=False, duplicates=False,
               trace=()):
    d = len(x)
    E = np.asarray(E, dtype=float).reshape(-1, d)
    order = np.asarray(order, dtype=np.int64)
    pick = lambda key, dtype=float: np.asarray(scores[key], dtype=dtype)[order] if len(order) else np.empty(0, dtype)
    return CounterfactualSet(np.asarray(x, dtype=float), E[order] if len(order) else np.empty((0, d)),
                             pick("valid", bool), pick("proximity"), pick("sparsity", np.int64),
                             pick("longitudinal"), pick("fitness"), method, k, subject_id,
                             shortfall, duplicates, None, tuple(trace))


def _top_distinct(E, order, k):
    seen, keep, spare = set(), [], []
    for i in order:
        key = E[i].tobytes()
        (spare if key in seen else keep).append(i)
        seen.add(key)
    if len(keep) >= k:
        return keep[:k], False
    rank = {int(i): r for r, i in enumerate(order)}
    return sorted(keep + spare[:k - len(keep)], key=lambda i: rank[int(i)]), True


def run_genetic(x, context: ScoringContext, config: FitnessConfig = DEFAULT_FITNESS,
                constraints: Optional[SearchConstraints] = None,
                params: GeneticParams = GeneticParams(), seed=0,
                subject_id: Optional[int] = None) -> CounterfactualSet:
    """Elitist genetic search for ``params.k`` counterfactuals of ``x``.

    The desired class comes from ``constraints``. Stops after ``patience``
    consecutive generations whose best-fitness gain is below
    ``convergence_epsilon`` (measured per unit of total weight so that
    rescaling all weights leaves the run unchanged), or after
    ``max_generations``. Returned candidates are distinct where possible;
    ``duplicates`` is set when they could not be.
    """
    if constraints is None:
        raise ConfigError("search constraints are required")
    z = constraints.desired_class
    x = constraints.schema.validate_vector(x)
    rng = np.random.default_rng(seed)
    pop = initial_population(x, z, context.model, constraints, params.pop_size, rng,
                             params.p_mut, params.init_rounds)
    pop = evaluate(pop, x, config, context, z)
    domains = constraints.domains(x)
    eps = params.convergence_epsilon * config.weight_scale

    trace, prev, stall = [], math.inf, 0
    for gen in range(params.max_generations):
        elite = select_fittest(pop)
        best = float(elite.fitness[0])
        trace.append(best)
        gain = 0.0 if best == prev else prev - best
        stall = stall + 1 if gain < eps else 0
        prev = best
        children = mate(elite, params.p_crossover_bias, rng)
        if params.p_mutation > 0 or params.p_revert > 0:
            children = mutate(children, x, domains, constraints.integer, params.p_mutation,
                              params.p_revert, rng)
        proba, valid = _validity(context.model, z, children)
        kids = evaluate(Population(children, proba, valid, generation=gen + 1), x, config, context, z)
        pop = Population.concat(elite, kids)
        pop.generation = gen + 1
        if stall >= params.patience:
            break

    order = _fitness_order(pop.fitness, pop.valid, pop.sparsity)
    picked, dup = _top_distinct(pop.candidates, order, params.k)
    E = pop.candidates[picked]
    scores = score_candidates(x, E, config, context, z, pop.proba[picked], pop.valid[picked],
                              with_longitudinal=True)
    return _build_set(x, E, scores, np.arange(len(picked)), "genetic", params.k, subject_id,
                      duplicates=dup, trace=trace)


def run_random(x, context: ScoringContext, constraints: SearchConstraints,
               n_samples: int = 2000, k: int = 10, seed=0,
               config: FitnessConfig = DEFAULT_FITNESS, batch: int = 64,
               subject_id: Optional[int] = None) -> CounterfactualSet:
    """Random-search baseline.

    Sample ``t`` redraws a random subset of the changeable features. The
    subset starts at one feature and grows by one every
    ``n_samples // n_changeable`` samples. Only distinct valid candidates
    are kept; the set is flagged ``shortfall`` when fewer than ``k`` appear.
    """
    if k < 1 or n_samples < 1:
        raise ConfigError("k and n_samples must be positive")
    z = constraints.desired_class
    x = constraints.schema.validate_vector(x)
    rng = np.random.default_rng(seed)
    domains = constraints.domains(x)
    # a categorical redraw must move off the current level
    domains = [dom if dom is None or isinstance(dom, tuple) else dom[dom != x[j]]
               for j, dom in enumerate(domains)]
    changeable = np.array([j for j, dom in enumerate(domains)
                           if dom is not None and (isinstance(dom, tuple) and dom[0] < dom[1]
                                                   or not isinstance(dom, tuple) and len(dom) > 0)])
    forced = np.array([isinstance(dom, tuple) and not _in_domain(x[j], dom) for j, dom in enumerate(domains)])
    found, seen = [], {x.tobytes()}
    per_size = max(1, n_samples // max(1, len(changeable)))
    t = 0
    while t < n_samples and len(found) < k and (len(changeable) or forced.any()):
        m = min(batch, n_samples - t)
        resample = np.tile(forced, (m, 1))
        for r in range(m):
            size = min(len(changeable), 1 + (t + r) // per_size)
            if size:
                resample[r, rng.choice(changeable, size=size, replace=False)] = True
        E = _perturb(x, domains, resample, constraints.integer, rng)
        _, valid = _validity(context.model, z, E)
        for r in range(m):
            key = E[r].tobytes()
            if valid[r] and key not in seen:
                seen.add(key)
                found.append(E[r])
                if len(found) == k:
                    break
        t += m

    if not found:
        empty = {key: np.empty(0) for key in ("valid", "proximity", "sparsity", "longitudinal", "fitness")}
        return _build_set(x, np.empty((0, len(x))), empty, [], "random", k, subject_id, shortfall=True)
    E = np.array(found)
    scores = score_candidates(x, E, config, context, z, with_longitudinal=True)
    order = _fitness_order(scores["fitness"], scores["valid"], scores["sparsity"])
    return _build_set(x, E, scores, order, "random", k, subject_id, shortfall=len(found) < k)


def subject_seed(seed: int, subject_id: int) -> np.random.SeedSequence:
    """Per-subject seed stream; independent of how subjects are partitioned across workers."""
    return np.random.SeedSequence([int(seed), int(subject_id)])


def _explain_one(args):
    x, sid, context, method, config, constraints, params, n_samples, seed = args
    ss = subject_seed(seed, sid)
    if method == "genetic":
        return run_genetic(x, context, config, constraints, params, ss, subject_id=sid)
    if method == "random":
        return run_random(x, context, constraints, n_samples, params.k, ss, config, subject_id=sid)
    raise ConfigError(f"unknown method {method!r}")


def explain_subjects(X, subject_ids, context: ScoringContext, constraints: SearchConstraints,
                     method: str = "genetic", config: FitnessConfig = DEFAULT_FITNESS,
                     params: GeneticParams = GeneticParams(), n_samples: int = 2000,
                     seed: int = 0, jobs: int = 1) -> list[CounterfactualSet]:
    """One counterfactual set per subject, in input order, for any ``jobs``."""
    tasks = [(np.asarray(x, dtype=float), int(sid), context, method, config, constraints,
              params, n_samples, seed) for x, sid in zip(X, subject_ids)]
    if jobs <= 1 or len(tasks) <= 1:
        return [_explain_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_explain_one, tasks))
