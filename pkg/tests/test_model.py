import numpy as np
import pytest

from samdp.cluster import Clustering, st_kmeans
from samdp.errors import SamdpError
from samdp.gridworld import bundled_maze_path, generate, load_maze
from samdp.model import (
    SamdpModel,
    identify_skills,
    infer,
    infer_from_clustering,
    read_model,
    samdp_value,
    write_model,
)
from samdp.trajectory import StateRecord, from_records

from .helpers import smdp_value_iteration


def clustering_for(labels, K):
    labels = np.asarray(labels)
    return Clustering(
        K=K, w=0, assignment=labels,
        centroids=np.zeros((K, 1)), inertia=0.0, seed=0,
    )


def dataset_with_labels(label_blocks, rewards_fn=lambda tid, t: 0.0, gamma=0.9):
    """One trajectory per block; 1-D features equal the labels."""
    recs = []
    for tid, labels in enumerate(label_blocks):
        for t, lab in enumerate(labels):
            recs.append(
                StateRecord(
                    tid, t, np.array([float(lab)]), 0,
                    rewards_fn(tid, t), t == len(labels) - 1, 0.0,
                )
            )
    return from_records(recs, gamma=gamma)


def test_identify_skills_simple_runs():
    ds = dataset_with_labels([[0, 0, 1, 1, 2]])
    skills = identify_skills(clustering_for([0, 0, 1, 1, 2], 3), ds)
    assert [(s.from_cluster, s.to_cluster) for s in skills] == [(0, 1), (1, 2)]
    assert skills[0].instances == [(0, 0, 2)]
    assert skills[1].instances == [(0, 2, 4)]
    assert skills[0].lengths().tolist() == [2]


def test_identify_skills_terminal_run_no_instance():
    ds = dataset_with_labels([[0, 0, 0]])
    assert identify_skills(clustering_for([0, 0, 0], 1), ds) == []


def test_identify_skills_counts_match_changepoints():
    # oracle: count label change points along trajectories independently
    cfg = load_maze(bundled_maze_path("maze_a"))
    ds = generate(cfg, 15)
    X = np.column_stack([ds.features, ds.values])
    c = st_kmeans(X, ds, K=6, w=1, seed=4)
    skills = identify_skills(c, ds)
    total_instances = sum(len(s.instances) for s in skills)
    changes = 0
    for _, s, e in ds.trajectories:
        a = c.assignment[s:e]
        changes += int(np.sum(a[1:] != a[:-1]))
    assert total_instances == changes


def alternating_chain(n_flips=40, gamma=0.9):
    # clusters 0 and 1 alternate with dwell 2; reward 1 at every step
    labels = []
    for i in range(n_flips):
        labels += [i % 2, i % 2]
    return dataset_with_labels([labels], rewards_fn=lambda tid, t: 1.0, gamma=gamma), labels


def test_infer_two_cluster_chain():
    ds, labels = alternating_chain()
    skills = identify_skills(clustering_for(labels, 2), ds)
    model = infer(skills, ds, gamma=0.9)
    assert np.array_equal(model.P, [[0.0, 1.0], [1.0, 0.0]])
    assert model.R[0, 1] == pytest.approx(1.9, abs=1e-12)
    assert model.R[1, 0] == pytest.approx(1.9, abs=1e-12)
    assert model.L[0, 1] == 2.0 and model.L[1, 0] == 2.0


def test_infer_value_of_chain_matches_geometric_series():
    # closed form oracle: v = 1.9 / (1 - 0.9^2) = 10
    ds, labels = alternating_chain()
    model = infer(identify_skills(clustering_for(labels, 2), ds), ds, gamma=0.9)
    assert np.allclose(model.v, [10.0, 10.0], atol=1e-9)


def test_pruning_thresholds():
    # counts (9, 1): both survive; counts (19, 1): pruned then renormalized
    def build(counts_to_1, counts_to_2):
        blocks = []
        for _ in range(counts_to_1):
            blocks.append([0, 0, 1, 1])
        for _ in range(counts_to_2):
            blocks.append([0, 0, 2, 2])
        return blocks

    blocks = build(9, 1)
    ds = dataset_with_labels(blocks)
    model = infer(identify_skills(clustering_for(np.concatenate(blocks), 3), ds), ds, gamma=0.9, k=3)
    assert model.P[0, 1] == pytest.approx(0.9)
    assert model.P[0, 2] == pytest.approx(0.1)

    blocks = build(19, 1)
    ds = dataset_with_labels(blocks)
    model = infer(identify_skills(clustering_for(np.concatenate(blocks), 3), ds), ds, gamma=0.9, k=3)
    assert model.P[0, 1] == 1.0
    assert model.P[0, 2] == 0.0
    assert model.counts[0, 2] == 1  # raw counts keep the pruned transition


def test_short_instances_discarded():
    # dwell of 1 in cluster 1: the 0->1 instance has length 2 but 1->2 has length 1
    ds = dataset_with_labels([[0, 0, 1, 2, 2, 2]])
    skills = identify_skills(clustering_for([0, 0, 1, 2, 2, 2], 3), ds)
    model = infer(skills, ds, gamma=0.9, k=3)
    assert model.counts[0, 1] == 1
    assert model.counts[1, 2] == 0


def test_infer_gridworld_matches_tally_oracle():
    cfg = load_maze(bundled_maze_path("maze_b"))
    ds = generate(cfg, 20)
    X = np.column_stack([ds.features, ds.values])
    c = st_kmeans(X, ds, K=7, w=1, seed=9)
    model = infer_from_clustering(c, ds, min_length=2, min_prob=0.0)

    # independent tally of pre-pruning transition frequencies
    tally = np.zeros((7, 7))
    for _, s, e in ds.trajectories:
        a = c.assignment[s:e]
        runs = [a[0]]
        starts = [0]
        for i in range(1, len(a)):
            if a[i] != a[i - 1]:
                runs.append(a[i])
                starts.append(i)
        starts.append(len(a))
        for r in range(len(runs) - 1):
            if starts[r + 1] - starts[r] >= 2:
                tally[runs[r], runs[r + 1]] += 1
    freq = np.zeros_like(tally)
    nz = tally.sum(axis=1) > 0
    freq[nz] = tally[nz] / tally[nz].sum(axis=1, keepdims=True)
    assert np.abs(model.P - freq).max() < 1e-12


def test_samdp_value_absorbing_cluster():
    v = samdp_value(np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)), 0.9)
    assert v[0] == 0.0


def test_samdp_value_gamma_to_zero_limit():
    ds, labels = alternating_chain(gamma=0.9)
    model = infer(identify_skills(clustering_for(labels, 2), ds), ds, gamma=1e-9)
    r = (model.P * model.R).sum(axis=1)
    assert np.abs(model.v - r).max() < 1e-6


def test_samdp_value_residual_invariant():
    cfg = load_maze(bundled_maze_path("maze_a"))
    ds = generate(cfg, 20)
    X = np.column_stack([ds.features, ds.values])
    for K, w, seed in [(6, 1, 0), (9, 2, 1)]:
        model = infer_from_clustering(st_kmeans(X, ds, K=K, w=w, seed=seed), ds)
        discount = model.gamma ** (model.P * model.L).sum(axis=1)
        r = (model.P * model.R).sum(axis=1)
        residual = np.abs(model.v - (r + discount * (model.P @ model.v))).max()
        assert residual < 1e-9


def test_samdp_value_matches_fixed_point_iteration_oracle():
    cfg = load_maze(bundled_maze_path("maze_c"))
    ds = generate(cfg, 12)
    X = np.column_stack([ds.features, ds.values])
    model = infer_from_clustering(st_kmeans(X, ds, K=6, w=1, seed=2), ds)
    oracle = smdp_value_iteration(model.P, model.R, model.L, model.gamma)
    assert np.abs(model.v - oracle).max() < 1e-8


def test_singular_system_gamma_one():
    ds, labels = alternating_chain(gamma=1.0)
    skills = identify_skills(clustering_for(labels, 2), ds)
    with pytest.raises(SamdpError, match="gamma"):
        infer(skills, ds, gamma=1.0)


def test_no_surviving_instances_is_error():
    ds = dataset_with_labels([[0, 1, 0, 1]])
    skills = identify_skills(clustering_for([0, 1, 0, 1], 2), ds)
    with pytest.raises(SamdpError, match="survive"):
        infer(skills, ds, gamma=0.9)


def test_planted_deterministic_skills_recovered():
    # 4 planted clusters in a deterministic cycle: P must be the 0/1 plant
    rng = np.random.default_rng(11)
    blocks = []
    for _ in range(12):
        labels = []
        for rep in range(3):
            for c in range(4):
                labels += [c] * int(rng.integers(2, 5))
        blocks.append(labels)
    ds = dataset_with_labels(blocks)
    model = infer(
        identify_skills(clustering_for(np.concatenate(blocks), 4), ds), ds, gamma=0.9, k=4
    )
    plant = np.array([
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
        [1, 0, 0, 0],
    ], dtype=float)
    assert np.array_equal(model.P, plant)


def test_pruning_is_idempotent():
    cfg = load_maze(bundled_maze_path("maze_a"))
    ds = generate(cfg, 25)
    X = np.column_stack([ds.features, ds.values])
    c = st_kmeans(X, ds, K=8, w=1, seed=5)
    model = infer_from_clustering(c, ds)
    # keep only instances of surviving (unpruned) skill entries, re-infer
    skills = identify_skills(c, ds)
    surviving = []
    for s in skills:
        kept = [inst for inst in s.instances if inst[2] - inst[1] >= 2]
        if kept and model.P[s.from_cluster, s.to_cluster] > 0:
            surviving.append(type(s)(s.from_cluster, s.to_cluster, kept))
    again = infer(surviving, ds, gamma=ds.gamma, k=8)
    assert np.abs(again.P - model.P).max() < 1e-12


def test_r_and_v_invariant_to_trajectory_order():
    cfg = load_maze(bundled_maze_path("maze_b"))
    ds = generate(cfg, 10)
    X = np.column_stack([ds.features, ds.values])
    c = st_kmeans(X, ds, K=5, w=1, seed=7)

    order = list(range(10))[::-1]
    recs = list(ds.records())
    perm_recs, perm_labels = [], []
    for new_tid, old_tid in enumerate(order):
        s, e = ds.trajectory_rows(old_tid)
        for r in recs[s:e]:
            perm_recs.append(StateRecord(new_tid, r.t, r.features, r.action, r.reward, r.done, r.value_estimate))
        perm_labels.append(c.assignment[s:e])
    ds_perm = from_records(perm_recs, gamma=ds.gamma)
    c_perm = Clustering(K=5, w=1, assignment=np.concatenate(perm_labels), centroids=c.centroids, inertia=c.inertia, seed=7)

    m1 = infer_from_clustering(c, ds)
    m2 = infer_from_clustering(c_perm, ds_perm)
    assert np.abs(m1.R - m2.R).max() < 1e-12
    assert np.abs(m1.v - m2.v).max() < 1e-12


def test_model_structural_invariants():
    cfg = load_maze(bundled_maze_path("maze_c"))
    ds = generate(cfg, 15)
    X = np.column_stack([ds.features, ds.values])
    for K, w, seed in [(5, 0, 0), (8, 2, 1)]:
        model = infer_from_clustering(st_kmeans(X, ds, K=K, w=w, seed=seed), ds)
        assert np.all(np.diag(model.P) == 0.0)
        live = ~model.absorbing
        assert np.abs(model.P[live].sum(axis=1) - 1.0).max() < 1e-9
        assert np.all(model.P[model.absorbing] == 0.0)
        assert np.all(model.L[model.P > 0] >= 2.0)
        assert np.all(model.v[model.absorbing] == 0.0)


def test_model_roundtrip(tmp_path):
    cfg = load_maze(bundled_maze_path("maze_a"))
    ds = generate(cfg, 8)
    X = np.column_stack([ds.features, ds.values])
    model = infer_from_clustering(st_kmeans(X, ds, K=5, w=1, seed=3), ds)
    p = tmp_path / "model.txt"
    write_model(model, p, w=1)
    got, w = read_model(p)
    assert w == 1
    assert got.K == model.K and got.gamma == model.gamma
    for name in ("P", "R", "L", "v", "counts"):
        assert np.array_equal(getattr(got, name), getattr(model, name)), name
    assert np.array_equal(got.absorbing, model.absorbing)
    p2 = tmp_path / "model2.txt"
    write_model(got, p2, w=w)
    assert p.read_bytes() == p2.read_bytes()
