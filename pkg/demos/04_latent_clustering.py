"""What if the outcome had never been measured? Latent-variable EM.

Simulates a labeled cohort, fits one network with the labels and one with
the outcome column hidden (EM clusters the players instead), then compares
the two influence rankings with Spearman correlation. A high correlation
means the unlabeled model supports the same conclusions.
"""

import time

from riskbn import (
    EmConfig,
    build_default_generator,
    default_dag,
    default_schema,
    em_fit,
    fit_cpts,
    simulate_dataset,
    spearman,
    strength_ranking,
)


def main() -> None:
    gen = build_default_generator(seed=0)
    schema = default_schema()
    dag = default_dag(schema)
    outcome, control = gen.outcome, gen.control

    dataset = simulate_dataset(5000, seed=101)
    print(f"simulated {dataset.n} players (seed 101)")

    labeled = fit_cpts(schema.network_variables, dag, dataset)
    labeled_rank = strength_ranking(labeled, outcome, control=control)

    hidden = dataset.without_columns([outcome])
    start = time.time()
    em_net, trace = em_fit(schema.network_variables, dag, hidden, [outcome],
                           config=EmConfig(restarts=10, seed=101))
    chosen = trace.log_likelihoods[trace.selected]
    print(f"EM: 10 restarts in {time.time() - start:.1f}s; selected restart "
          f"{trace.selected} after {len(chosen)} iterations "
          f"({'converged' if trace.converged[trace.selected] else 'iteration cap'})")
    latent_rank = strength_ranking(em_net, outcome, control=control)

    print(f"\n{'variable':28s} {'labeled':>8s} {'latent':>8s}")
    for name, score in labeled_rank.entries[:10]:
        print(f"{name:28s} {score:8.4f} {latent_rank.score(name):8.4f}")

    names = sorted(name for name, _ in labeled_rank.entries)
    result = spearman([labeled_rank.score(n) for n in names],
                      [latent_rank.score(n) for n in names])
    print(f"\nSpearman correlation between the rankings: rho={result.rho:.3f} "
          f"(p={result.p_value:.2e}, n={result.n})")
    print("the unlabeled model reproduces the labeled ranking"
          if result.rho >= 0.8 else "rankings diverge; inspect the trace")


if __name__ == "__main__":
    main()
