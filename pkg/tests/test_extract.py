import json

import numpy as np
import pytest

from rnnclust import automata, cluster, construct, data, extract, probe, rnn
from rnnclust.automata import DFA, MOORE, FiniteStateMachine
from rnnclust.exceptions import EmptyTrace, IncompleteAutomaton


@pytest.fixture(scope="module", params=[3, 5, 7])
def constructed(request):
    d = automata.tomita(request.param)
    model = construct.encode_dfa(d)
    h0 = construct.initial_hidden(model, d)
    ds = data.sample_dataset(d, 2000, seed=1)
    return d, model, probe.collect_hq(d, model, h0, ds.words), ds.words


def test_dbscan_transition_clusters_minimize_to_source(constructed):
    d, model, hq, words = constructed
    labels = cluster.dbscan(hq.hidden, 0.5).labels
    ca = extract.extract_automaton(hq, labels, model)
    assert ca.num_states == d.num_transitions + 1  # transition clusters plus h0
    assert ca.conflict_rate == 0 and not ca.holes
    report = extract.verify_against_ground_truth(ca, d, words)
    assert report["equivalent"] and report["agreement"] == 1.0
    assert report["minimized_states"] == d.num_states
    eps_class = d.classify(())  # the start vector is never classified on its own
    assert automata.minimize(ca.to_machine(d.alphabet, unobserved_class=eps_class)).num_states == d.num_states


def test_merged_states_are_reported(constructed):
    # merging an accepting and a rejecting state must break equivalence
    d, model, hq, words = constructed
    acc = sorted(d.accepting)
    rej = [q for q in range(d.num_states) if q not in d.accepting]
    labels = hq.states.copy()
    labels[labels == rej[0]] = acc[0]
    ca = extract.extract_automaton(hq, labels, model)
    report = extract.verify_against_ground_truth(ca, d, words)
    assert not report["equivalent"] and report["counterexample"] is not None
    assert report["agreement"] < 1
    w = tuple(d.symbol_ids(report["counterexample"]))
    assert ca.run(w) != d.classify(w)


def test_single_word_holes():
    d = automata.tomita(5)
    model = rnn.init_model("gru", 1, 4, 2, 2)
    hq = probe.collect_hq(d, model, None, ["0"])
    ca = extract.extract_automaton(hq, [0, 1], model)
    assert ca.table.tolist() == [[1, -1], [-1, -1]]
    assert ca.holes == [(0, 1), (1, 0), (1, 1)]
    with pytest.raises(IncompleteAutomaton):
        ca.to_machine()
    assert ca.to_machine(complete=True).num_states == 3
    with pytest.raises(IncompleteAutomaton):
        extract.verify_against_ground_truth(ca, d, ["00"])
    with pytest.raises(IncompleteAutomaton):
        extract.verify_against_ground_truth(ca, d, ["0"], complete=False)


def test_majority_and_tie_break():
    d = automata.tomita(5)
    model = rnn.init_model("gru", 1, 4, 2, 2)
    words = ["0", "0", "0", "1", "1"]
    hq = probe.collect_hq(d, model, None, words)
    # records: (w0: 0, a) (w1: 0, b) (w2: 0, b) (w3: 0, c) (w4: 0, d)
    labels = np.array([0, 1, 0, 2, 0, 2, 0, 3, 0, 4])
    ca = extract.extract_automaton(hq, labels, model)
    assert ca.table[0, 0] == 2  # majority of {1, 2, 2}
    assert ca.table[0, 1] == 3  # tie between 3 and 4 goes to the smaller id
    assert ca.conflict_rate == pytest.approx(2 / 5)


def test_against_itself(tmp_path):
    d = automata.tomita(3)
    model = construct.encode_dfa(d)
    h0 = construct.initial_hidden(model, d)
    ds = data.sample_dataset(d, 500, seed=2)
    hq = probe.collect_hq(d, model, h0, ds.words)
    ca = extract.extract_automaton(hq, hq.states, model, provenance={"method": "truth"})
    m = ca.to_machine(d.alphabet, complete=True)
    report = extract.verify_against_ground_truth(ca, m, ds.words)
    assert report["agreement"] == 1.0
    extract.save_report(report, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["provenance"] == {"method": "truth"}


def test_moore_majority_output():
    m = FiniteStateMachine(MOORE, [[1, 2], [2, 0], [0, 1]], outputs=(0, 1, 2))
    model = rnn.init_model("gru", 1, 6, 2, 3, seed=0)
    ds = data.sample_dataset(m, 200, seed=0)
    hq = probe.collect_hq(m, model, None, ds.words)
    ca = extract.extract_automaton(hq, hq.states, model, kind=MOORE)
    out = probe.network_outputs(model, hq)
    voted = hq.steps > 0
    for k in range(ca.num_states):
        counts = np.bincount(out[(hq.states == k) & voted], minlength=3)
        assert ca.classes[k] == int(np.argmax(counts))


def test_start_output_does_not_vote():
    # an untrained net's output at h0 is arbitrary; the start-only cluster stays unobserved
    d = automata.tomita(5)
    model = rnn.init_model("gru", 1, 8, 2, 2, seed=0)
    ds = data.sample_dataset(d, 300, seed=0)
    hq = probe.collect_hq(d, model, None, ds.words)
    labels = np.where(hq.steps == 0, 99, hq.states)
    ca = extract.extract_automaton(hq, labels, model)
    assert ca.unobserved == [99] and ca.cluster_ids[ca.initial] == 99
    assert ca.run(()) == extract.UNOBSERVED
    report = extract.verify_against_ground_truth(ca, d, ds.words)
    assert report["empty_word_from_ground_truth"]
    assert ca.to_machine(d.alphabet, unobserved_class=1).classify(()) == 1


def test_empty_trace():
    d = automata.tomita(5)
    model = rnn.init_model("gru", 1, 4, 2, 2)
    hq = probe.collect_hq(d, model, None, [])
    with pytest.raises(EmptyTrace):
        extract.extract_automaton(hq, [], model)
