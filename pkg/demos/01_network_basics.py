"""Build a small network by hand, query it, and round-trip the model file.

Walks the core surface: schema/DAG/CPT construction with validation, exact
joint/posterior/marginal queries, serialization, and forward sampling.
"""

from riskbn import (
    Cpt,
    DagStructure,
    VariableSpec,
    ancestral_sample,
    build_network,
    evidence_probability,
    joint_probability,
    marginal,
    parse_model,
    posterior,
    serialize_model,
    topological_order,
)


def main() -> None:
    # Rain -> Sprinkler is omitted on purpose: a three-node chain is enough
    # to see every query type at work.
    schema = [
        VariableSpec("Rain", ("No", "Yes")),
        VariableSpec("WetGrass", ("No", "Yes")),
        VariableSpec("SlipperyPath", ("No", "Yes")),
    ]
    dag = DagStructure(
        ("Rain", "WetGrass", "SlipperyPath"),
        (("Rain", "WetGrass"), ("WetGrass", "SlipperyPath")),
    )
    cpts = [
        Cpt("Rain", (), [[0.8, 0.2]]),
        Cpt("WetGrass", ("Rain",), [[0.9, 0.1], [0.05, 0.95]]),
        Cpt("SlipperyPath", ("WetGrass",), [[0.95, 0.05], [0.3, 0.7]]),
    ]
    net = build_network(schema, dag, cpts)
    print("network valid; topological order:", " -> ".join(topological_order(net)))

    everything_wet = {"Rain": "Yes", "WetGrass": "Yes", "SlipperyPath": "Yes"}
    print("P(all Yes) =", joint_probability(net, everything_wet))
    print("P(WetGrass) =", dict(zip(("No", "Yes"), marginal(net, "WetGrass").probabilities)))

    slippery = posterior(net, "Rain", {"SlipperyPath": "Yes"})
    print("P(Rain | SlipperyPath=Yes) =", dict(zip(slippery.states, slippery.probabilities)))
    print("P(SlipperyPath=Yes) =", evidence_probability(net, {"SlipperyPath": "Yes"}))

    text = serialize_model(net)
    assert parse_model(text) == net
    print(f"model file round-trips bit-exactly ({len(text)} bytes)")

    batch = ancestral_sample(net, 5, seed=7)
    print("five sampled worlds (seed 7):")
    for i in range(5):
        print("  ", batch.record(net, i))


if __name__ == "__main__":
    main()
