//! Elitist non-dominated sorting genetic search over interval vectors, with
//! constraint domination, simulated binary crossover and polynomial
//! mutation. Evaluation is parallel but order-preserving, so runs with the
//! same seed are bit-identical regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interpolation::{solve_trajectory, TrajectoryProblem};
use crate::optimizer::{
    constraint_margins, eval_time, hypervolume_2d, lower_bounds, squared_jerk_integral,
    ObjectivePoint, MIN_INTERVAL_FLOOR, UPPER_BOUND_REFERENCE, UPPER_BOUND_SCALE,
};
use crate::spline::IntervalVector;

/// Violation assigned to interval vectors whose interpolation system is
/// degenerate; large enough to lose every comparison against real audits.
const DEGENERATE_VIOLATION: f64 = 1e30;

/// Search hyperparameters. Defaults follow common practice for real-coded
/// bi-objective problems of this size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nsga2Config {
    pub population_size: usize,
    pub generations: usize,
    pub seed: u64,
    pub crossover_probability: f64,
    pub crossover_distribution_index: f64,
    pub mutation_distribution_index: f64,
    /// Per-gene mutation probability; `None` means `1 / dimension`.
    pub mutation_probability: Option<f64>,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            population_size: 90,
            generations: 200,
            seed: 0,
            crossover_probability: 0.9,
            crossover_distribution_index: 15.0,
            mutation_distribution_index: 20.0,
            mutation_probability: None,
        }
    }
}

impl Nsga2Config {
    fn validate(&self) -> Result<()> {
        if self.population_size < 4 || self.population_size % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "population size must be even and at least 4, got {}",
                self.population_size
            )));
        }
        if self.generations == 0 {
            return Err(Error::InvalidArgument("generations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(Error::InvalidArgument(format!(
                "crossover probability must lie in [0, 1], got {}",
                self.crossover_probability
            )));
        }
        if let Some(pm) = self.mutation_probability {
            if !(0.0..=1.0).contains(&pm) {
                return Err(Error::InvalidArgument(format!(
                    "mutation probability must lie in [0, 1], got {pm}"
                )));
            }
        }
        if self.crossover_distribution_index <= 0.0 || self.mutation_distribution_index <= 0.0 {
            return Err(Error::InvalidArgument(
                "distribution indices must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Progress snapshot taken after each survival step (and once for the
/// initial population as generation 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Feasible first-front members in the current population.
    pub front_size: usize,
    pub best_violation: f64,
    /// Dominated area of the best front found so far, against a reference
    /// fixed when feasible points first appeared; `None` before that.
    pub hypervolume: Option<f64>,
}

/// Search outcome: the feasible non-dominated subset of the final
/// population, the full final population for audits, and the per-generation
/// progress trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationRun {
    pub front: Vec<ObjectivePoint>,
    pub population: Vec<ObjectivePoint>,
    pub history: Vec<GenerationStats>,
    pub reference: Option<[f64; 2]>,
    pub evaluations: usize,
}

struct Individual {
    genome: Vec<f64>,
    objectives: [f64; 2],
    violation: f64,
    rank: usize,
    crowding: f64,
}

impl Individual {
    fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    fn to_point(&self) -> ObjectivePoint {
        ObjectivePoint {
            intervals: IntervalVector::new(self.genome.clone())
                .expect("search bounds keep intervals positive"),
            f_time: self.objectives[0],
            f_jerk: self.objectives[1],
            violation: self.violation,
        }
    }
}

fn evaluate(problem: &TrajectoryProblem, genome: Vec<f64>) -> Individual {
    let h = IntervalVector::new(genome.clone()).expect("search bounds keep intervals positive");
    let f_time = eval_time(&h, problem.joint_count());
    let (f_jerk, violation) = match solve_trajectory(&h, problem) {
        Ok(traj) => (
            squared_jerk_integral(&traj),
            constraint_margins(&traj, problem.limits()).violation,
        ),
        Err(_) => (0.0, DEGENERATE_VIOLATION),
    };
    Individual {
        genome,
        objectives: [f_time, f_jerk],
        violation,
        rank: 0,
        crowding: 0.0,
    }
}

fn evaluate_all(problem: &TrajectoryProblem, genomes: Vec<Vec<f64>>) -> Vec<Individual> {
    genomes
        .into_par_iter()
        .map(|g| evaluate(problem, g))
        .collect()
}

/// Constraint domination: feasible beats infeasible, infeasible compete on
/// violation, feasible compete on Pareto dominance.
fn dominates(a: &Individual, b: &Individual) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => {
            let no_worse = a.objectives[0] <= b.objectives[0] && a.objectives[1] <= b.objectives[1];
            let better = a.objectives[0] < b.objectives[0] || a.objectives[1] < b.objectives[1];
            no_worse && better
        }
    }
}

fn fast_nondominated_sort(inds: &[Individual]) -> Vec<Vec<usize>> {
    let n = inds.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dominators = vec![0usize; n];
    let mut fronts: Vec<Vec<usize>> = vec![Vec::new()];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if dominates(&inds[i], &inds[j]) {
                dominated_by_me[i].push(j);
            } else if dominates(&inds[j], &inds[i]) {
                dominators[i] += 1;
            }
        }
        if dominators[i] == 0 {
            fronts[0].push(i);
        }
    }
    let mut current = 0;
    while !fronts[current].is_empty() {
        let mut next = Vec::new();
        for &i in &fronts[current] {
            for &j in &dominated_by_me[i] {
                dominators[j] -= 1;
                if dominators[j] == 0 {
                    next.push(j);
                }
            }
        }
        fronts.push(next);
        current += 1;
    }
    fronts.pop();
    fronts
}

fn assign_crowding(inds: &mut [Individual], front: &[usize]) {
    if front.len() <= 2 {
        for &i in front {
            inds[i].crowding = f64::INFINITY;
        }
        return;
    }
    for &i in front {
        inds[i].crowding = 0.0;
    }
    for m in 0..2 {
        let mut order = front.to_vec();
        order.sort_by(|&x, &y| inds[x].objectives[m].total_cmp(&inds[y].objectives[m]));
        let first = order[0];
        let last = *order.last().expect("front has at least three members");
        inds[first].crowding = f64::INFINITY;
        inds[last].crowding = f64::INFINITY;
        let range = inds[last].objectives[m] - inds[first].objectives[m];
        if range <= 0.0 {
            continue;
        }
        for k in 1..order.len() - 1 {
            let gap = inds[order[k + 1]].objectives[m] - inds[order[k - 1]].objectives[m];
            inds[order[k]].crowding += gap / range;
        }
    }
}

/// Ranks the combined parent+offspring pool and keeps the best `target` by
/// (rank, crowding), refreshing both fields on the survivors.
fn survival(combined: Vec<Individual>, target: usize) -> Vec<Individual> {
    let mut pool = combined;
    let fronts = fast_nondominated_sort(&pool);
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            pool[i].rank = rank;
        }
        assign_crowding(&mut pool, front);
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    for front in &fronts {
        if chosen.len() + front.len() <= target {
            chosen.extend_from_slice(front);
        } else {
            let mut rest = front.clone();
            rest.sort_by(|&x, &y| {
                pool[y]
                    .crowding
                    .total_cmp(&pool[x].crowding)
                    .then(x.cmp(&y))
            });
            chosen.extend(rest.into_iter().take(target - chosen.len()));
        }
        if chosen.len() == target {
            break;
        }
    }
    let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|i| slots[i].take().expect("indices are distinct"))
        .collect()
}

fn tournament(pop: &[Individual], rng: &mut ChaCha8Rng) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    let (x, y) = (&pop[a], &pop[b]);
    if x.rank != y.rank {
        if x.rank < y.rank {
            a
        } else {
            b
        }
    } else if x.crowding != y.crowding {
        if x.crowding > y.crowding {
            a
        } else {
            b
        }
    } else {
        a
    }
}

fn sbx(
    p1: &[f64],
    p2: &[f64],
    lo: &[f64],
    hi: &[f64],
    pc: f64,
    eta: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random::<f64>() > pc {
        return (c1, c2);
    }
    for i in 0..c1.len() {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let (y1, y2) = if p1[i] < p2[i] {
            (p1[i], p2[i])
        } else {
            (p2[i], p1[i])
        };
        if y2 - y1 < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let spread = |beta_bound: f64| -> f64 {
            let alpha = 2.0 - beta_bound.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let b1 = spread(1.0 + 2.0 * (y1 - lo[i]) / (y2 - y1));
        let b2 = spread(1.0 + 2.0 * (hi[i] - y2) / (y2 - y1));
        let ch1 = (0.5 * ((y1 + y2) - b1 * (y2 - y1))).clamp(lo[i], hi[i]);
        let ch2 = (0.5 * ((y1 + y2) + b2 * (y2 - y1))).clamp(lo[i], hi[i]);
        if rng.random::<f64>() < 0.5 {
            c1[i] = ch2;
            c2[i] = ch1;
        } else {
            c1[i] = ch1;
            c2[i] = ch2;
        }
    }
    (c1, c2)
}

fn polynomial_mutation(
    genome: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    pm: f64,
    eta: f64,
    rng: &mut ChaCha8Rng,
) {
    for i in 0..genome.len() {
        if rng.random::<f64>() >= pm {
            continue;
        }
        let (l, u) = (lo[i], hi[i]);
        if u <= l {
            continue;
        }
        let y = genome[i];
        let d1 = (y - l) / (u - l);
        let d2 = (u - y) / (u - l);
        let r: f64 = rng.random();
        let exp = 1.0 / (eta + 1.0);
        let dq = if r < 0.5 {
            let v = 2.0 * r + (1.0 - 2.0 * r) * (1.0 - d1).powf(eta + 1.0);
            v.powf(exp) - 1.0
        } else {
            let v = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(exp)
        };
        genome[i] = (y + dq * (u - l)).clamp(l, u);
    }
}

/// Non-dominated set of feasible objective pairs seen so far; insertion
/// keeps the set minimal, so its dominated area never shrinks.
struct ParetoArchive {
    points: Vec<[f64; 2]>,
}

impl ParetoArchive {
    fn new() -> Self {
        ParetoArchive { points: Vec::new() }
    }

    fn insert(&mut self, p: [f64; 2]) {
        if self
            .points
            .iter()
            .any(|q| q[0] <= p[0] && q[1] <= p[1])
        {
            return;
        }
        self.points.retain(|q| !(p[0] <= q[0] && p[1] <= q[1]));
        self.points.push(p);
    }
}

fn reference_from(pop: &[Individual]) -> Option<[f64; 2]> {
    let feasible: Vec<&Individual> = pop.iter().filter(|i| i.feasible()).collect();
    if feasible.is_empty() {
        return None;
    }
    let max0 = feasible
        .iter()
        .map(|i| i.objectives[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let max1 = feasible
        .iter()
        .map(|i| i.objectives[1])
        .fold(f64::NEG_INFINITY, f64::max);
    Some([1.1 * max0, 1.1 * max1])
}

/// Searches interval vectors for the time/jerk trade-off front of `problem`.
/// Box bounds come from [`lower_bounds`] with a positivity floor; the upper
/// bound leaves room for trajectories well slower than the kinematic floor.
/// Returns an error if the final population holds no feasible member.
pub fn nsga2(problem: &TrajectoryProblem, config: &Nsga2Config) -> Result<OptimizationRun> {
    config.validate()?;
    let raw = lower_bounds(problem);
    let dim = raw.len();
    let lo: Vec<f64> = raw.iter().map(|l| l.max(MIN_INTERVAL_FLOOR)).collect();
    let hi: Vec<f64> = raw
        .iter()
        .map(|l| UPPER_BOUND_SCALE * l.max(UPPER_BOUND_REFERENCE))
        .collect();
    let pm = config
        .mutation_probability
        .unwrap_or(1.0 / dim as f64);
    let pc = config.crossover_probability;
    let eta_c = config.crossover_distribution_index;
    let eta_m = config.mutation_distribution_index;
    let target = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let genomes: Vec<Vec<f64>> = (0..target)
        .map(|_| {
            (0..dim)
                .map(|i| rng.random_range(lo[i]..=hi[i]))
                .collect()
        })
        .collect();
    let mut population = evaluate_all(problem, genomes);
    let mut evaluations = population.len();
    // rank the initial population so tournaments and stats are meaningful
    population = survival(population, target);

    let mut reference = reference_from(&population);
    let mut archive = ParetoArchive::new();
    for ind in population.iter().filter(|i| i.feasible()) {
        archive.insert(ind.objectives);
    }
    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(stats_for(0, &population, &archive, reference));

    for generation in 1..=config.generations {
        let mut offspring = Vec::with_capacity(target);
        while offspring.len() < target {
            let a = tournament(&population, &mut rng);
            let b = tournament(&population, &mut rng);
            let (mut c1, mut c2) = sbx(
                &population[a].genome,
                &population[b].genome,
                &lo,
                &hi,
                pc,
                eta_c,
                &mut rng,
            );
            polynomial_mutation(&mut c1, &lo, &hi, pm, eta_m, &mut rng);
            polynomial_mutation(&mut c2, &lo, &hi, pm, eta_m, &mut rng);
            offspring.push(c1);
            if offspring.len() < target {
                offspring.push(c2);
            }
        }
        let children = evaluate_all(problem, offspring);
        evaluations += children.len();
        let mut combined = population;
        combined.extend(children);
        population = survival(combined, target);

        if reference.is_none() {
            reference = reference_from(&population);
        }
        for ind in population.iter().filter(|i| i.feasible()) {
            archive.insert(ind.objectives);
        }
        history.push(stats_for(generation, &population, &archive, reference));
    }

    let front: Vec<ObjectivePoint> = population
        .iter()
        .filter(|i| i.rank == 0 && i.feasible())
        .map(Individual::to_point)
        .collect();
    if front.is_empty() {
        let best_violation = population
            .iter()
            .map(|i| i.violation)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::OptimizationFailed { best_violation });
    }
    Ok(OptimizationRun {
        front,
        population: population.iter().map(Individual::to_point).collect(),
        history,
        reference,
        evaluations,
    })
}

fn stats_for(
    generation: usize,
    pop: &[Individual],
    archive: &ParetoArchive,
    reference: Option<[f64; 2]>,
) -> GenerationStats {
    let front_size = pop.iter().filter(|i| i.rank == 0 && i.feasible()).count();
    let best_violation = pop
        .iter()
        .map(|i| i.violation)
        .fold(f64::INFINITY, f64::min);
    let hypervolume = reference.map(|r| hypervolume_2d(&archive.points, r));
    GenerationStats {
        generation,
        front_size,
        best_violation,
        hypervolume,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolation::JointLimits;

    fn small_problem() -> TrajectoryProblem {
        TrajectoryProblem::new(
            vec![vec![0.0, 0.9, 0.3]],
            vec![JointLimits::new(1.5, 8.0, 60.0).unwrap()],
        )
        .unwrap()
    }

    fn quick_config(seed: u64) -> Nsga2Config {
        Nsga2Config {
            population_size: 24,
            generations: 25,
            seed,
            ..Nsga2Config::default()
        }
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut c = Nsga2Config::default();
        c.population_size = 3;
        assert!(nsga2(&small_problem(), &c).is_err());
        c.population_size = 7;
        assert!(nsga2(&small_problem(), &c).is_err());
        c = Nsga2Config::default();
        c.crossover_probability = 1.5;
        assert!(nsga2(&small_problem(), &c).is_err());
        c = Nsga2Config::default();
        c.generations = 0;
        assert!(nsga2(&small_problem(), &c).is_err());
    }

    #[test]
    fn same_seed_reproduces_run_exactly() {
        let p = small_problem();
        let a = nsga2(&p, &quick_config(7)).unwrap();
        let b = nsga2(&p, &quick_config(7)).unwrap();
        assert_eq!(
            serde_json::to_string(&a.front).unwrap(),
            serde_json::to_string(&b.front).unwrap()
        );
        assert_eq!(
            serde_json::to_string(&a.history).unwrap(),
            serde_json::to_string(&b.history).unwrap()
        );
        let c = nsga2(&p, &quick_config(8)).unwrap();
        assert_ne!(
            serde_json::to_string(&a.front).unwrap(),
            serde_json::to_string(&c.front).unwrap()
        );
    }

    #[test]
    fn front_is_feasible_and_mutually_nondominated() {
        let run = nsga2(&small_problem(), &quick_config(3)).unwrap();
        assert!(!run.front.is_empty());
        for p in &run.front {
            assert!(p.feasible());
        }
        for a in &run.front {
            for b in &run.front {
                let dominated = b.f_time <= a.f_time
                    && b.f_jerk <= a.f_jerk
                    && (b.f_time < a.f_time || b.f_jerk < a.f_jerk);
                assert!(!dominated, "{a:?} dominated by {b:?}");
            }
        }
    }

    #[test]
    fn genomes_respect_box_bounds() {
        let p = small_problem();
        let raw = lower_bounds(&p);
        let run = nsga2(&p, &quick_config(5)).unwrap();
        for point in &run.population {
            for (i, v) in point.intervals.values().iter().enumerate() {
                let lo = raw[i].max(MIN_INTERVAL_FLOOR);
                let hi = UPPER_BOUND_SCALE * raw[i].max(UPPER_BOUND_REFERENCE);
                assert!(*v >= lo && *v <= hi, "gene {i} = {v} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn hypervolume_trace_is_nondecreasing() {
        let run = nsga2(&small_problem(), &quick_config(11)).unwrap();
        let values: Vec<f64> = run
            .history
            .iter()
            .filter_map(|s| s.hypervolume)
            .collect();
        assert!(!values.is_empty());
        for pair in values.windows(2) {
            assert!(
                pair[1] >= pair[0],
                "hypervolume dropped from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn impossible_limits_report_optimization_failure() {
        // huge velocity bound keeps every box upper bound at 2 s per
        // interval, while the acceleration bound makes the move hopeless
        let p = TrajectoryProblem::new(
            vec![vec![0.0, 1.0]],
            vec![JointLimits::new(1e6, 1e-6, 1e6).unwrap()],
        )
        .unwrap();
        let mut c = quick_config(1);
        c.generations = 5;
        match nsga2(&p, &c) {
            Err(Error::OptimizationFailed { best_violation }) => {
                assert!(best_violation > 0.0);
            }
            other => panic!("expected optimization failure, got {other:?}"),
        }
    }

    #[test]
    fn dominance_relation_is_constraint_first() {
        let mk = |f: [f64; 2], v: f64| Individual {
            genome: vec![1.0, 1.0, 1.0],
            objectives: f,
            violation: v,
            rank: 0,
            crowding: 0.0,
        };
        let feas_good = mk([1.0, 1.0], 0.0);
        let feas_bad = mk([2.0, 2.0], 0.0);
        let infeas_low = mk([0.1, 0.1], 0.5);
        let infeas_high = mk([0.1, 0.1], 2.0);
        assert!(dominates(&feas_good, &feas_bad));
        assert!(!dominates(&feas_bad, &feas_good));
        assert!(dominates(&feas_bad, &infeas_low));
        assert!(dominates(&infeas_low, &infeas_high));
        assert!(!dominates(&infeas_high, &infeas_low));
        // equal objectives: neither dominates
        assert!(!dominates(&feas_good, &feas_good));
    }

    #[test]
    fn archive_insertion_keeps_minimal_set() {
        let mut a = ParetoArchive::new();
        a.insert([2.0, 2.0]);
        a.insert([3.0, 3.0]); // dominated, ignored
        assert_eq!(a.points.len(), 1);
        a.insert([1.0, 3.0]);
        a.insert([3.0, 1.0]);
        assert_eq!(a.points.len(), 3);
        a.insert([0.5, 0.5]); // dominates everything
        assert_eq!(a.points, vec![[0.5, 0.5]]);
        a.insert([0.5, 0.5]); // duplicate of an archive member, ignored
        assert_eq!(a.points.len(), 1);
    }
}
