"""Observer-gain synthesis by a bounded-real-lemma LMI.

For an observer base plant A with measurement map C, performance map
C_z, mismatch channel delta_a and level gamma, feasibility of

    [ Q A + A^T Q - Y C - C^T Y^T     [Q delta_a, -Y]      C_z^T ]
    [            *                        -gamma I           0   ]  < 0,   Q > 0
    [            *                            *          -gamma I ]

is equivalent to the error dynamics (A - L C, [delta_a, -L], C_z) with
L = Q^-1 Y being stable with H-infinity norm below gamma.

The solver is a purpose-built log-det barrier interior-point method:
minimize t subject to F(Q, Y) <= t I and Q >= eps I, following the
analytic center path with a geometric barrier schedule. Problems here
are small (a few hundred scalar variables), so Newton systems are
assembled densely from stacked basis matrices. Infeasibility is a
certified answer, not an exception: the certificate carries the best
attained largest eigenvalue so callers can rank infeasible designs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericError, SynthesisError, ValidationError
from .linalg import as_matrix, as_square, is_hurwitz, spectral_abscissa
from .norms import hinf_norm
from .statespace import error_system

__all__ = [
    "ObserverLmiProblem",
    "LmiCertificate",
    "CertificateReport",
    "solve_observer_lmi",
    "verify_certificate",
    "synth_hinf_filter",
]

GAMMA_CAP = 1e3


@dataclass(frozen=True, eq=False)
class ObserverLmiProblem:
    """One observer-synthesis LMI instance.

    gamma must lie in (0, 1e3]; the typical operating range in this
    package is (0, 1].
    """

    A: np.ndarray
    C: np.ndarray
    C_z: np.ndarray
    delta_a: np.ndarray
    gamma: float

    def __post_init__(self):
        A = as_square(self.A, "A")
        C = as_matrix(self.C, "C")
        C_z = as_matrix(self.C_z, "C_z")
        delta_a = as_square(self.delta_a, "delta_a")
        n = A.shape[0]
        if C.shape[1] != n or C_z.shape[1] != n:
            raise ValidationError("C and C_z must have as many columns as A")
        if delta_a.shape != A.shape:
            raise ValidationError("delta_a shape must match A")
        gamma = float(self.gamma)
        if not (0.0 < gamma <= GAMMA_CAP):
            raise ValidationError(f"gamma must lie in (0, {GAMMA_CAP:g}], got {gamma}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "C_z", C_z)
        object.__setattr__(self, "delta_a", delta_a)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def n_measured(self):
        return self.C.shape[0]

    @property
    def n_performance(self):
        return self.C_z.shape[0]


@dataclass(frozen=True, eq=False)
class LmiCertificate:
    """Outcome of one LMI solve.

    For feasible problems margin = -lambda_max(F(Q, Y)) > 0 and the
    gain L = Q^-1 Y is recoverable; for infeasible ones best_eigenvalue
    records the smallest achievable lambda_max (a smooth measure of how
    far from feasible the problem is)."""

    feasible: bool
    gamma: float
    Q: np.ndarray
    Y: np.ndarray
    margin: float
    best_eigenvalue: float
    eps_floor: float
    newton_iterations: int

    def gain(self):
        if not self.feasible:
            raise ValidationError("no gain: certificate is infeasible")
        return np.linalg.solve(self.Q, self.Y)


class _LmiKernel:
    """Precomputed basis tensors for one (A, C, C_z, delta_a) structure;
    gamma only shifts the constant block, so bisection over gamma reuses
    the expensive setup."""

    def __init__(self, A, C, C_z, delta_a):
        # Equivalence scaling: time-scaling A, delta_a and the recovered
        # gain by sigma leaves the error-system H-infinity norm
        # unchanged, so the barrier always runs near unit scale.
        self.sigma = max(1.0, float(np.linalg.norm(A, 2)))
        self.A = A / self.sigma
        self.delta_a = delta_a / self.sigma
        self.C = C
        self.C_z = C_z
        n = A.shape[0]
        r = C.shape[0]
        q = C_z.shape[0]
        self.n, self.r, self.q = n, r, q
        self.k = 2 * n + r + q
        self.nq = n * (n + 1) // 2
        self.ny = n * r
        self.eps = 1e-6 * float(np.linalg.norm(self.A, 2))

        k, nq, ny = self.k, self.nq, self.ny
        B_breve = np.hstack([self.delta_a, np.zeros((n, r))])  # n x (n + r)
        F = np.zeros((nq + ny, k, k))
        G = np.zeros((nq, n, n))
        idx = 0
        for a in range(n):
            for b in range(a, n):
                E = np.zeros((n, n))
                E[a, b] = 1.0
                E[b, a] = 1.0
                F11 = E @ self.A + self.A.T @ E
                F12 = E @ B_breve
                F[idx, :n, :n] = F11
                F[idx, :n, n : 2 * n + r] = F12
                F[idx, n : 2 * n + r, :n] = F12.T
                G[idx] = E
                idx += 1
        for c in range(n):
            for d in range(r):
                E = np.zeros((n, r))
                E[c, d] = 1.0
                F11 = -(E @ C + C.T @ E.T)
                F[idx, :n, :n] = F11
                # -Y D_breve places -E in the last r columns of block 12.
                F[idx, :n, 2 * n : 2 * n + r] = -E
                F[idx, 2 * n : 2 * n + r, :n] = -E.T
                idx += 1
        self.Fmats = F
        self.Gmats = G

    def constant_block(self, gamma):
        k, n, r, q = self.k, self.n, self.r, self.q
        F0 = np.zeros((k, k))
        F0[:n, 2 * n + r :] = self.C_z.T
        F0[2 * n + r :, :n] = self.C_z
        F0[n : 2 * n + r, n : 2 * n + r] = -gamma * np.eye(n + r)
        F0[2 * n + r :, 2 * n + r :] = -gamma * np.eye(q)
        return F0

    def unpack(self, x):
        n, r = self.n, self.r
        Q = np.zeros((n, n))
        iu = np.triu_indices(n)
        Q[iu] = x[: self.nq]
        Q = Q + np.triu(Q, 1).T
        Y = x[self.nq :].reshape(n, r)
        return Q, Y

    def pack(self, Q, Y):
        iu = np.triu_indices(self.n)
        return np.concatenate([Q[iu], Y.ravel()])

    def solve(self, gamma, mode="design", tau0=1.0, mu=5.0, max_outer=200,
              gap_tol=1e-9):
        if mode not in ("design", "optimize"):
            raise ValidationError(f"unknown solve mode {mode!r}")
        n, k = self.n, self.k
        m = self.nq + self.ny
        F0 = self.constant_block(gamma)
        eps = self.eps

        Q0 = max(1.0, 4.0 * eps) * np.eye(n)
        Y0 = np.zeros((n, self.r))
        x = self.pack(Q0, Y0)
        Fx = F0 + np.tensordot(x, self.Fmats, axes=1)
        lam_max = float(np.max(np.linalg.eigvalsh(Fx)))
        t = lam_max + 1.0 + 0.1 * abs(lam_max)

        nu_barrier = k + n  # total log-det barrier degree
        tau = tau0
        newton_total = 0

        def eval_chols(x_, t_):
            Fx_ = F0 + np.tensordot(x_, self.Fmats, axes=1)
            S = t_ * np.eye(k) - Fx_
            Q_, _ = self.unpack(x_)
            T = Q_ - eps * np.eye(n)
            try:
                Ls = scipy.linalg.cholesky(S, lower=True)
                Lt = scipy.linalg.cholesky(T, lower=True)
            except scipy.linalg.LinAlgError:
                return None
            return Ls, Lt

        def psi(x_, t_, tau_):
            ch = eval_chols(x_, t_)
            if ch is None:
                return np.inf
            Ls, Lt = ch
            return (
                tau_ * t_
                - 2.0 * float(np.sum(np.log(np.diag(Ls))))
                - 2.0 * float(np.sum(np.log(np.diag(Lt))))
            )

        for _ in range(max_outer):
            for _inner in range(60):
                ch = eval_chols(x, t)
                if ch is None:
                    raise NumericError("barrier iterate left the cone")
                Ls, Lt = ch
                Si = scipy.linalg.cho_solve((Ls, True), np.eye(k))
                Ti = scipy.linalg.cho_solve((Lt, True), np.eye(n))

                W = Si[None, :, :] @ self.Fmats           # W_i = S^-1 F_i
                g_x = np.einsum("mii->m", W)
                # H[a, b] = tr(S^-1 F_a S^-1 F_b) = tr(W_a W_b)
                Wt_flat = W.transpose(0, 2, 1).reshape(m, k * k)
                H = Wt_flat @ W.reshape(m, k * k).T

                WT = Ti[None, :, :] @ self.Gmats          # nq x n x n
                g_x[: self.nq] -= np.einsum("mii->m", WT)
                H[: self.nq, : self.nq] += (
                    WT.transpose(0, 2, 1).reshape(self.nq, n * n)
                    @ WT.reshape(self.nq, n * n).T
                )

                g_t = tau - float(np.trace(Si))
                h_xt = -np.einsum("mij,ji->m", W, Si)
                h_tt = float(np.sum(Si * Si))

                Hfull = np.empty((m + 1, m + 1))
                Hfull[:m, :m] = H
                Hfull[:m, m] = h_xt
                Hfull[m, :m] = h_xt
                Hfull[m, m] = h_tt
                g = np.concatenate([g_x, [g_t]])

                reg = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(Hfull)))))
                Hfull[np.diag_indices_from(Hfull)] += reg
                try:
                    step = np.linalg.solve(Hfull, -g)
                except np.linalg.LinAlgError as exc:
                    raise NumericError("Newton system singular") from exc

                decrement2 = float(-g @ step)
                if decrement2 < 0.0:
                    # Hessian lost definiteness to rounding; bail to outer.
                    break
                newton_total += 1
                base = psi(x, t, tau)
                alpha = 1.0
                gTd = float(g @ step)
                accepted = False
                for _bt in range(60):
                    x_new = x + alpha * step[:m]
                    t_new = t + alpha * step[m]
                    val = psi(x_new, t_new, tau)
                    if val <= base + 0.01 * alpha * gTd:
                        x, t = x_new, t_new
                        accepted = True
                        break
                    alpha *= 0.5
                if not accepted:
                    break
                if decrement2 * 0.5 < 1e-11:
                    break
            if mode == "design":
                # Take the first centred strictly feasible iterate instead
                # of chasing the minimiser; the optimum sits on the Q floor
                # and recovers a uselessly high gain.
                Fx = F0 + np.tensordot(x, self.Fmats, axes=1)
                if float(np.max(np.linalg.eigvalsh(Fx))) < 0.0:
                    break
            if nu_barrier / tau < gap_tol * max(1.0, abs(t)):
                break
            tau *= mu

        Fx = F0 + np.tensordot(x, self.Fmats, axes=1)
        lam_max = float(np.max(np.linalg.eigvalsh(Fx)))
        Q, Y = self.unpack(x)
        feasible = lam_max < 0.0
        # Report in problem coordinates: F is invariant under
        # (Q, Y) -> (Q / sigma, Y) paired with the unscaled A, delta_a,
        # and the recovered gain picks up the factor sigma automatically.
        return LmiCertificate(
            feasible=feasible,
            gamma=gamma,
            Q=Q / self.sigma,
            Y=Y,
            margin=-lam_max,
            best_eigenvalue=lam_max,
            eps_floor=self.eps / self.sigma,
            newton_iterations=newton_total,
        )


def solve_observer_lmi(problem, mode="design"):
    """Solve one observer LMI; never raises on infeasibility (see
    LmiCertificate), only on numerical breakdown.

    mode 'design' stops at the first strictly feasible centred iterate,
    which keeps the recovered gain moderate; 'optimize' follows the
    barrier path to the minimum worst eigenvalue, which is what the
    infeasibility margin in best_eigenvalue is measured against."""
    kernel = _LmiKernel(problem.A, problem.C, problem.C_z, problem.delta_a)
    return kernel.solve(problem.gamma, mode=mode)


@dataclass(frozen=True)
class CertificateReport:
    """Independent re-verification of a feasible certificate."""

    margin: float
    q_min_eigenvalue: float
    closed_loop_abscissa: float
    achieved_norm: float
    ok: bool


def verify_certificate(problem, cert):
    """Recheck a feasible certificate from scratch: rebuild the LMI
    block at (Q, Y), confirm Q > 0 and A - L C Hurwitz, and recompute
    the worst-channel error norm with the independent bisection code."""
    if not cert.feasible:
        raise ValidationError("cannot verify an infeasible certificate")
    A, C, C_z, dA = problem.A, problem.C, problem.C_z, problem.delta_a
    n, r, q = problem.n, problem.n_measured, problem.n_performance
    Q, Y = cert.Q, cert.Y
    gamma = cert.gamma
    F = np.zeros((2 * n + r + q, 2 * n + r + q))
    F[:n, :n] = Q @ A + A.T @ Q - Y @ C - C.T @ Y.T
    F12 = np.hstack([Q @ dA, -Y])
    F[:n, n : 2 * n + r] = F12
    F[n : 2 * n + r, :n] = F12.T
    F[:n, 2 * n + r :] = C_z.T
    F[2 * n + r :, :n] = C_z
    F[n : 2 * n + r, n : 2 * n + r] = -gamma * np.eye(n + r)
    F[2 * n + r :, 2 * n + r :] = -gamma * np.eye(q)
    margin = -float(np.max(np.linalg.eigvalsh(F)))
    q_min = float(np.min(np.linalg.eigvalsh(Q)))
    L = cert.gain()
    abscissa = spectral_abscissa(A - L @ C)
    err = error_system(A, dA, C, C_z, L)
    achieved = hinf_norm(err.model).value
    ok = margin > 0.0 and q_min > 0.0 and abscissa < 0.0 and achieved < gamma
    return CertificateReport(
        margin=margin,
        q_min_eigenvalue=q_min,
        closed_loop_abscissa=abscissa,
        achieved_norm=achieved,
        ok=ok,
    )


def synth_hinf_filter(A, C, C_z, rel_tol=1e-3, gamma_cap=GAMMA_CAP,
                      gamma_floor=1e-6, backoff=0.0):
    """Smallest-gamma observer for a single plant (no mismatch channel).

    Bisects gamma to rel_tol (relative), doubling upward from 1 until
    feasible; raises SynthesisError if nothing at or below gamma_cap
    works. Returns (gain, gamma_star, certificate).

    The infimum is sometimes approached only as the gain blows up; a
    positive backoff re-solves at gamma_star * (1 + backoff) and returns
    that gain instead, trading a little performance for a usable gain.
    gamma_star still reports the bisection value."""
    A = as_square(A, "A")
    kernel = _LmiKernel(A, as_matrix(C, "C"), as_matrix(C_z, "C_z"), np.zeros_like(A))

    hi = 1.0
    cert_hi = kernel.solve(hi)
    while not cert_hi.feasible:
        hi *= 2.0
        if hi > gamma_cap:
            raise SynthesisError(
                f"no feasible gamma at or below the cap {gamma_cap:g}"
            )
        cert_hi = kernel.solve(hi)
    lo = gamma_floor if hi == 1.0 else hi / 2.0
    while (hi - lo) > rel_tol * hi and hi > gamma_floor:
        mid = 0.5 * (lo + hi)
        cert_mid = kernel.solve(mid)
        if cert_mid.feasible:
            hi, cert_hi = mid, cert_mid
        else:
            lo = mid
    if backoff > 0.0:
        cert_hi = kernel.solve(hi * (1.0 + backoff))
        if not cert_hi.feasible:
            raise NumericError("relaxed gamma unexpectedly infeasible")
    L = cert_hi.gain()
    if not is_hurwitz(A - L @ C):
        raise NumericError("bisection returned a non-stabilizing gain")
    return L, hi, cert_hi
