"""Independent correctness oracles for the core numerical paths.

Each oracle checks a production routine against a second route computed a
different way: the iterative spectral radius against a dense eigensolver,
the ridge solver against hand-rolled Gaussian elimination, the recursive
readout update against its batch closed form, the taped policy gradients
against central finite differences, the cart-pole step against an
independently derived mass-matrix formulation, and the sled's long-run
speed against the closed-form root of its force balance.

:func:`run_oracles` executes all of them and reports per-oracle pass/fail
with the observed error magnitudes; it backs both the test suite and the
``oracles`` CLI subcommand.
"""

from __future__ import annotations

import math


import numpy as np

from .adapt import RlsConfig, RlsReadout, ridge_fit
from .agent import SacAgent, SacConfig
from .envs import CartPoleWind, CartPoleWindConfig, FrictionSled, FrictionSledConfig, sled_terminal_velocity
from .numerics import make_rng, spectral_radius


def dense_spectral_radius(m: np.ndarray) -> float:
    """Brute-force reference: max |eigenvalue| from the dense QR eigensolver."""
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def gauss_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Written with explicit row operations, independent of ``numpy.linalg``,
    so it can vouch for the library solver.
    """
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    n = a.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) < 1e-300:
            raise RuntimeError(f"matrix is singular at column {col}")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def ridge_reference(states: np.ndarray, targets: np.ndarray, reg: float) -> np.ndarray:
    """Normal-equation ridge solution via :func:`gauss_solve`."""
    gram = states @ states.T + reg * np.eye(states.shape[0])
    return gauss_solve(gram, states @ targets.T).T


def cartpole_reference_step(cfg: CartPoleWindConfig, state: np.ndarray, action: float, t: int) -> np.ndarray:
    """One cart-pole step from the simultaneous equations of motion.

    Solves the 2x2 mass-matrix system for the two accelerations by Cramer's
    rule instead of the substituted closed form the environment uses, then
    applies the same semi-implicit Euler update.
    """
    x, x_dot, theta, theta_dot = (float(v) for v in state)
    force = action * cfg.force_mag + cfg.wind_amplitude * math.cos(cfg.wind_omega * t)
    total_mass = cfg.cart_mass + cfg.pole_mass
    pml = cfg.pole_mass * cfg.pole_half_length
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    # [ M+m        m*l*cos ] [x_acc ]   [ F + m*l*w^2*sin ]
    # [ cos     (4/3)*l    ] [th_acc] = [ g*sin            ]
    a11, a12 = total_mass, pml * cos_t
    a21, a22 = cos_t, (4.0 / 3.0) * cfg.pole_half_length
    b1 = force + pml * theta_dot**2 * sin_t
    b2 = cfg.gravity * sin_t
    det = a11 * a22 - a12 * a21
    x_acc = (b1 * a22 - a12 * b2) / det
    theta_acc = (a11 * b2 - b1 * a21) / det
    x_dot += cfg.tau * x_acc
    x += cfg.tau * x_dot
    theta_dot += cfg.tau * theta_acc
    theta += cfg.tau * theta_dot
    return np.array([x, x_dot, theta, theta_dot])


def rls_ridge_discrepancy(seed: int, n_x: int, n_y: int, steps: int, delta: float = 100.0, forgetting: float = 1.0) -> float:
    """Relative Frobenius gap between the recursive and batch solutions.

    With forgetting factor 1 and initial covariance ``delta * I`` the
    recursion must land exactly on ridge regression with ``reg = 1/delta``;
    any forgetting below 1 breaks the identity, which is how the test suite
    confirms this check has teeth.
    """
    rng = make_rng(seed, 101)
    xs = rng.standard_normal((n_x, steps))
    w_true = rng.standard_normal((n_y, n_x))
    ys = w_true @ xs + 0.1 * rng.standard_normal((n_y, steps))
    rls = RlsReadout(RlsConfig(forgetting=forgetting, delta=delta), n_y=n_y, n_x=n_x)
    for i in range(steps):
        rls.rls_step(xs[:, i], ys[:, i])
    w_batch = ridge_fit(xs, ys, reg=1.0 / delta)
    return float(np.linalg.norm(rls.w_out - w_batch) / max(np.linalg.norm(w_batch), 1e-30))


def finite_difference_max_error(loss_fn, params: list[np.ndarray], analytic: list[np.ndarray], h: float = 1e-5, rng: np.random.Generator | None = None, max_coords: int = 100) -> float:
    """Worst relative disagreement between analytic gradients and central
    finite differences over (up to) ``max_coords`` coordinates."""
    coords = []
    for pi, p in enumerate(params):
        for idx in np.ndindex(p.shape):
            coords.append((pi, idx))
    if rng is not None and len(coords) > max_coords:
        chosen = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in chosen]
    worst = 0.0
    for pi, idx in coords:
        p = params[pi]
        original = p[idx]
        p[idx] = original + h
        up = loss_fn()
        p[idx] = original - h
        down = loss_fn()
        p[idx] = original
        fd = (up - down) / (2.0 * h)
        an = analytic[pi][idx]
        rel = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
        worst = max(worst, rel)
    return worst


def _toy_agent_and_batch(seed: int):
    cfg = SacConfig(hidden_sizes=(2,), batch_size=4, replay_capacity=16, warmup_steps=0)
    agent = SacAgent(input_dim=4, act_dim=1, cfg=cfg, act_low=np.array([-1.0]), act_high=np.array([1.0]), seed=seed)
    rng = make_rng(seed, 102)
    s = rng.standard_normal((4, 4))
    a = np.tanh(rng.standard_normal((4, 1)))
    r = rng.standard_normal(4)
    s_next = rng.standard_normal((4, 4))
    done = (rng.uniform(size=4) < 0.3).astype(np.float64)
    return agent, (s, a, r, s_next, done), rng


def sac_gradient_errors(seed: int) -> dict:
    """Max relative FD error of each loss gradient on a toy network."""
    agent, (s, a, r, s_next, done), rng = _toy_agent_and_batch(seed)
    eps_next = rng.standard_normal((4, 1))
    y = agent.critic_targets(r, s_next, done, eps_next)
    critic_params = agent.critic1_params + agent.critic2_params
    _, critic_grads = agent.critic_loss_and_grads(s, a, y)
    critic_err = finite_difference_max_error(
        lambda: agent.critic_loss_and_grads(s, a, y)[0], critic_params, critic_grads
    )

    alpha = float(np.exp(agent.log_temperature))
    eps = rng.standard_normal((4, 1))
    _, actor_grads, logp = agent.actor_loss_and_grads(s, eps, alpha)
    actor_err = finite_difference_max_error(
        lambda: agent.actor_loss_and_grads(s, eps, alpha)[0], agent.actor.params(), actor_grads
    )

    _, temp_grad = agent.temperature_loss_and_grad(logp)
    temp_err = finite_difference_max_error(
        lambda: agent.temperature_loss_and_grad(logp)[0], [agent.log_temperature], [np.asarray(temp_grad)]
    )
    return {"critic": critic_err, "actor": actor_err, "temperature": temp_err}


# -- the oracle suite ----------------------------------------------------


def oracle_spectral_radius(scale: str) -> dict:
    seeds = range(3 if scale == "small" else 12)
    worst = 0.0
    cases = 0
    for seed in seeds:
        for dim in (2, 3, 5, 8):
            m = make_rng(seed, 103, dim).standard_normal((dim, dim))
            worst = max(worst, abs(spectral_radius(m) - dense_spectral_radius(m)))
            cases += 1
    worst = max(worst, abs(spectral_radius(np.diag([2.0, 1.0])) - 2.0))
    return _verdict("spectral_radius_vs_dense_eigensolver", worst, 1e-6, cases + 1)


def oracle_ridge(scale: str) -> dict:
    seeds = range(3 if scale == "small" else 10)
    worst = 0.0
    cases = 0
    for seed in seeds:
        rng = make_rng(seed, 104)
        states = rng.standard_normal((10, 200))
        targets = rng.standard_normal((4, 200))
        w = ridge_fit(states, targets, reg=1e-2)
        w_ref = ridge_reference(states, targets, reg=1e-2)
        worst = max(worst, float(np.max(np.abs(w - w_ref))))
        cases += 1
    return _verdict("ridge_vs_gaussian_elimination", worst, 1e-9, cases)


def oracle_rls_ridge(scale: str) -> dict:
    seeds = range(3 if scale == "small" else 10)
    steps = 120 if scale == "small" else 500
    worst = 0.0
    cases = 0
    for seed in seeds:
        worst = max(worst, rls_ridge_discrepancy(seed, n_x=12, n_y=3, steps=steps))
        cases += 1
    return _verdict("rls_vs_batch_ridge", worst, 1e-8, cases)


def oracle_sac_gradients(scale: str) -> dict:
    seeds = range(1 if scale == "small" else 3)
    worst = 0.0
    cases = 0
    for seed in seeds:
        errors = sac_gradient_errors(seed)
        worst = max(worst, *errors.values())
        cases += 3
    return _verdict("sac_losses_vs_finite_differences", worst, 1e-4, cases)


def oracle_cartpole_dynamics(scale: str) -> dict:
    seeds = range(3 if scale == "small" else 10)
    worst = 0.0
    cases = 0
    for seed in seeds:
        rng = make_rng(seed, 105)
        cfg = CartPoleWindConfig(wind_amplitude=float(rng.uniform(0.0, 5.0)))
        env = CartPoleWind(cfg)
        env.reset(rng)
        env.state = rng.uniform(-0.1, 0.1, size=4)
        for _ in range(20):
            action = float(rng.uniform(-1.0, 1.0))
            expected = cartpole_reference_step(cfg, env.state, action, env.t)
            tr = env.step(np.array([action]))
            worst = max(worst, float(np.max(np.abs(tr.s_next - expected))))
            cases += 1
            if tr.done:
                env.reset(rng)
    zero = CartPoleWind(CartPoleWindConfig())
    zero.state = np.zeros(4)
    expected = cartpole_reference_step(zero.cfg, np.zeros(4), 1.0, 0)
    worst = max(worst, float(np.max(np.abs(zero.step(np.array([1.0])).s_next - expected))))
    return _verdict("cartpole_vs_reference_dynamics", worst, 1e-12, cases + 1)


def oracle_sled_terminal_velocity(scale: str) -> dict:
    cfg = FrictionSledConfig(max_steps=6000)
    env = FrictionSled(cfg)
    env.reset(make_rng(0, 106))
    env.state = np.zeros(3)
    for _ in range(5000):
        env.step(np.array([1.0]))
    worst = abs(env.state[0] - sled_terminal_velocity(cfg, action=1.0, multiplier=1.0))
    high = FrictionSledConfig(max_steps=6000, friction_multiplier=10.0, switch_step=0)
    env = FrictionSled(high)
    env.reset(make_rng(1, 106))
    env.state = np.zeros(3)
    for _ in range(5000):
        env.step(np.array([1.0]))
    worst = max(worst, abs(env.state[0] - sled_terminal_velocity(high, action=1.0)))
    return _verdict("sled_terminal_velocity_closed_form", float(worst), 1e-6, 2)


def _verdict(name: str, max_error: float, tol: float, cases: int) -> dict:
    return {"name": name, "passed": bool(max_error <= tol), "max_error": float(max_error), "tolerance": tol, "cases": cases}


ORACLES = (
    oracle_spectral_radius,
    oracle_ridge,
    oracle_rls_ridge,
    oracle_sac_gradients,
    oracle_cartpole_dynamics,
    oracle_sled_terminal_velocity,
)


def run_oracles(scale: str = "small") -> dict:
    """Execute every oracle at the given scale ('small' or 'full')."""
    if scale not in ("small", "full"):
        raise ValueError(f"scale must be 'small' or 'full', got '{scale}'")
    results = [fn(scale) for fn in ORACLES]
    return {"scale": scale, "oracles": results, "all_passed": all(r["passed"] for r in results)}
