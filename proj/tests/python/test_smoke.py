"""End-to-end checks of the Python module against known exact values."""

import math

import pytest

import topicident


THETA = [[0.6, 0.4], [0.3, 0.7]]


def test_likelihood_matches_hand_computation():
    # Uniform vertex mixing: 0.5 * (0.6^2) + 0.5 * (0.3^2) = 0.225.
    value = topicident.likelihood(THETA, 0.0, [0, 0], mixing="vertex")
    assert value == pytest.approx(0.225, abs=1e-15)
    assert topicident.likelihood(THETA, 0.0, [1, 1], mixing="vertex") == pytest.approx(
        0.325, abs=1e-15
    )


def test_distances_on_identical_parameters_are_zero():
    assert topicident.tv_distance(THETA, THETA, 0.0, 2, mixing="vertex") == 0.0
    assert topicident.kl_divergence(THETA, THETA, 0.0, 2, mixing="vertex") == 0.0
    assert topicident.wasserstein_distance(THETA, THETA) == 0.0
    swapped = [THETA[1], THETA[0]]
    assert topicident.tv_distance(THETA, swapped, 0.0, 2, mixing="vertex") == 0.0
    assert topicident.wasserstein_distance(THETA, swapped) == 0.0


def test_classify_order_flags_duplicate_rows():
    independent = [
        [0.4, 0.3, 0.1, 0.1, 0.1],
        [0.1, 0.1, 0.2, 0.3, 0.3],
    ]
    report = topicident.classify_order(independent, 0.05, 2)
    assert report["p_order"] == 1
    assert report["full_column_rank"] is True
    assert report["V"] == 5 and report["K"] == 2 and report["m"] == 2
    assert report["sigma_min"] / report["sigma_max"] > 1e-8

    duplicate = [independent[0], independent[0]]
    degenerate = topicident.classify_order(duplicate, 0.05, 2)
    assert degenerate["p_order"] == 2
    assert degenerate["full_column_rank"] is False


def test_project_row_matches_worked_example():
    projected = topicident.project_row([0.9, 0.2, -0.1], 0.0)
    assert list(projected) == pytest.approx([0.85, 0.15, 0.0], abs=1e-12)
    floored = topicident.project_row([0.9, 0.2, -0.1], 0.1)
    assert min(floored) >= 0.1
    assert sum(floored) == pytest.approx(1.0, abs=1e-12)


def test_sample_corpus_is_deterministic_in_the_seed():
    first = topicident.sample_corpus(THETA, 0.0, 3, 50, seed=11, mixing="vertex")
    second = topicident.sample_corpus(THETA, 0.0, 3, 50, seed=11, mixing="vertex")
    moved = topicident.sample_corpus(THETA, 0.0, 3, 50, seed=12, mixing="vertex")
    assert first == second
    assert first != moved
    assert len(first) == 50
    assert all(len(doc) == 3 and all(w in (0, 1) for w in doc) for doc in first)


def test_fit_mle_returns_a_feasible_optimum():
    corpus = topicident.sample_corpus(THETA, 0.0, 2, 400, seed=5, mixing="vertex")
    fit = topicident.fit_mle(
        corpus, 2, 2, 0.05, mixing="vertex", starts=2, max_iterations=200, seed=3
    )
    assert set(fit) == {
        "theta_hat",
        "c0",
        "log_likelihood",
        "iterations",
        "winner_start",
        "converged",
    }
    theta_hat = fit["theta_hat"]
    assert theta_hat.shape == (2, 2)
    assert theta_hat.min() >= 0.05
    for row in theta_hat:
        assert row.sum() == pytest.approx(1.0, abs=1e-12)
    assert math.isfinite(fit["log_likelihood"])


def test_table1_reproduces_the_published_order_pattern():
    rows = topicident.table1(seed=7)
    labels = [row["label"] for row in rows]
    assert labels == [
        "independent-K3-m3",
        "independent-K3-m2",
        "independent-K2-m2",
        "duplicate-K2-m3",
        "duplicate-plus-distinct-K3-m4",
        "midpoint-third-K3-m3",
        "convex-82-third-K3-m3",
    ]
    assert [row["p_order"] for row in rows] == [1, 2, 1, 2, 2, 1, 1]
