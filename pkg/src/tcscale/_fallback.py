"""Pure-Python (numpy) versions of the compiled kernels in ``_kernels.pyx``."""

import math

import numpy as np

BACKEND = "python"


def bootstrap_slopes(lx, ly, idx):
    xs = lx[idx]
    ys = ly[idx]
    dx = xs - xs.mean(axis=1, keepdims=True)
    dy = ys - ys.mean(axis=1, keepdims=True)
    return (dx * dy).sum(axis=1) / (dx * dx).sum(axis=1)


def _loss(n_params, tokens, e_floor, a_n, exp_n, b_d, exp_d, u, r_star, gamma, r0, p_exp):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        rep = np.maximum(tokens / u - 1.0, 0.0)
        d_eff = np.where(tokens <= u, tokens, u * (1.0 + r_star * (1.0 - np.exp(-rep / r_star))))
        over = rep - r0
        pen = np.where(over > 0.0, gamma * np.power(np.maximum(over, 0.0), p_exp), 0.0)
        return e_floor + a_n / np.power(n_params, exp_n) + b_d / np.power(d_eff, exp_d) + pen


def sim_grid(params_m, tps, budgets_min, e_floor, a_n, exp_n, b_d, exp_d, u, r_star, gamma, r0, p_exp):
    n_params = (params_m * 1e6)[:, None]
    tokens = tps[:, None] * budgets_min[None, :] * 60.0
    return _loss(n_params, tokens, e_floor, a_n, exp_n, b_d, exp_d, u, r_star, gamma, r0, p_exp)


def sim_rmse(params_m, tps, budgets_min, target, e_floor, a_n, exp_n, b_d, exp_d, u, r_star, gamma, r0, p_exp):
    loss = _loss(params_m * 1e6, tps * budgets_min * 60.0, e_floor, a_n, exp_n, b_d, exp_d, u, r_star, gamma, r0, p_exp)
    d = loss - target
    return math.sqrt(float(np.dot(d, d)) / len(target))
