"""Dense primal-dual interior-point method for small SDPs.

Standard form::

    minimize    c_f.x_f + c_l.x_l + sum_k <C_k, X_k>
    subject to  A_f x_f + A_l x_l + sum_k A_k(X_k) = b
                x_f free, x_l >= 0, X_k PSD (real symmetric)

Search directions use Nesterov-Todd scaling and Mehrotra's
predictor-corrector.  The iteration starts from an infeasible point.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .problem import MalformedProblem, SdpProblem, SdpSolution, Settings, Status

log = logging.getLogger(__name__)


@dataclass
class _BlockData:
    rows: np.ndarray          # constraint indices touching this block
    mats: np.ndarray          # (len(rows), s, s) symmetric coefficients
    cost: np.ndarray          # (s, s)

    @property
    def size(self) -> int:
        return self.cost.shape[0]

    def apply(self, x: np.ndarray, m: int) -> np.ndarray:
        out = np.zeros(m)
        out[self.rows] = np.einsum("rij,ij->r", self.mats, x)
        return out

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return np.einsum("r,rij->ij", y[self.rows], self.mats)


@dataclass
class StandardForm:
    b: np.ndarray
    a_free: np.ndarray
    c_free: np.ndarray
    a_lp: np.ndarray
    c_lp: np.ndarray
    blocks: list[_BlockData]
    offset: float = 0.0
    sign: float = 1.0
    block_names: list[str] = field(default_factory=list)
    scalar_map: dict = field(default_factory=dict)
    row_map: np.ndarray | None = None  # original row of each kept row

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def degree(self) -> int:
        return self.a_lp.shape[1] + sum(bl.size for bl in self.blocks)

    def apply(self, xf, xl, xs) -> np.ndarray:
        out = self.a_free @ xf + self.a_lp @ xl
        for bl, x in zip(self.blocks, xs):
            out = out + bl.apply(x, self.m)
        return out

    def dense(self) -> np.ndarray:
        cols = [self.a_free, self.a_lp]
        for bl in self.blocks:
            s = bl.size
            full = np.zeros((self.m, s * s))
            full[bl.rows] = bl.mats.reshape(len(bl.rows), -1)
            cols.append(full)
        return np.hstack(cols)

    def select_rows(self, keep: np.ndarray) -> StandardForm:
        pos = -np.ones(self.m, dtype=int)
        pos[keep] = np.arange(len(keep))
        blocks = []
        for bl in self.blocks:
            mask = pos[bl.rows] >= 0
            blocks.append(_BlockData(pos[bl.rows[mask]], bl.mats[mask], bl.cost))
        rm = keep if self.row_map is None else self.row_map[keep]
        return StandardForm(self.b[keep], self.a_free[keep], self.c_free, self.a_lp[keep], self.c_lp,
                            blocks, self.offset, self.sign, self.block_names, self.scalar_map, rm)


def compile_problem(p: SdpProblem, use_objective: bool = True) -> StandardForm:
    """Translate a declarative problem into standard form.

    Scalars with bounds become shifted nonnegative variables; a doubly
    bounded scalar also gets a slack and an extra equality row.
    """
    if not p.constraints and not any(s.lower is not None or s.upper is not None for s in p.scalars.values()):
        raise MalformedProblem("problem has no constraints or bounds")
    rows = len(p.constraints)
    extra = []
    scalar_map = {}
    n_free = n_lp = 0
    for s in p.scalars.values():
        if s.lower is None and s.upper is None:
            scalar_map[s.name] = ("free", n_free, 0.0, 1.0)
            n_free += 1
        elif s.upper is None:
            scalar_map[s.name] = ("lp", n_lp, s.lower, 1.0)
            n_lp += 1
        elif s.lower is None:
            scalar_map[s.name] = ("lp", n_lp, s.upper, -1.0)
            n_lp += 1
        else:
            scalar_map[s.name] = ("lp", n_lp, s.lower, 1.0)
            extra.append((n_lp, n_lp + 1, s.upper - s.lower))
            n_lp += 2
    m = rows + len(extra)
    b = np.zeros(m)
    a_free = np.zeros((m, n_free))
    a_lp = np.zeros((m, n_lp))
    c_free = np.zeros(n_free)
    c_lp = np.zeros(n_lp)
    names = list(p.blocks)
    per_block = {n: ([], []) for n in names}
    for r, con in enumerate(p.constraints):
        b[r] = con.rhs
        for n, c in con.blocks.items():
            per_block[n][0].append(r)
            per_block[n][1].append(p.real_coefficient(n, c))
        for sname, v in con.scalars.items():
            kind, idx, base, sgn = scalar_map[sname]
            b[r] -= v * base
            (a_free if kind == "free" else a_lp)[r, idx] += v * sgn
    for k, (u, w, width) in enumerate(extra):
        a_lp[rows + k, u] = a_lp[rows + k, w] = 1.0
        b[rows + k] = width
    sign = -1.0 if p.sense == "max" else 1.0
    offset = 0.0
    if use_objective:
        for sname, v in p.objective_scalars.items():
            kind, idx, base, sgn = scalar_map[sname]
            offset += sign * v * base
            (c_free if kind == "free" else c_lp)[idx] += sign * v * sgn
    blocks = []
    for n in names:
        s = p.blocks[n].real_size
        r, mats = per_block[n]
        cost = np.zeros((s, s))
        if use_objective and n in p.objective_blocks:
            cost = sign * p.real_coefficient(n, p.objective_blocks[n])
        mats = np.array(mats, dtype=float) if mats else np.zeros((0, s, s))
        blocks.append(_BlockData(np.array(r, dtype=int), mats, cost))
    return StandardForm(b, a_free, c_free, a_lp, c_lp, blocks, offset, sign, names, scalar_map)


def reduce_rows(sf: StandardForm, tol: float = 1e-10):
    """Drop linearly dependent rows.

    Returns ``(reduced_form, witness)``; ``witness`` is a Farkas vector
    ``y`` with ``A^T y = 0`` and ``b.y = -1`` when the rows are inconsistent.
    """
    if sf.m == 0:
        return sf, None
    a = sf.dense()
    gram = a @ a.T
    scale = max(float(np.max(np.diag(gram))), 1e-300)
    _, r, piv = sla.qr(gram, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * scale))
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(sf.m), keep)
    if len(drop):
        coef, *_ = np.linalg.lstsq(a[keep].T, a[drop].T, rcond=None)
        mismatch = sf.b[drop] - coef.T @ sf.b[keep]
        bscale = 1 + np.max(np.abs(sf.b))
        worst = int(np.argmax(np.abs(mismatch)))
        if abs(mismatch[worst]) > 1e-9 * bscale:
            y = np.zeros(sf.m)
            y[drop[worst]] = 1.0
            y[keep] = -coef[:, worst]
            return sf, -y / mismatch[worst]
    return sf.select_rows(keep), None


@dataclass
class _Iterate:
    xf: np.ndarray
    xl: np.ndarray
    zl: np.ndarray
    xs: list
    zs: list
    y: np.ndarray


def _nt_scaling(x: np.ndarray, z: np.ndarray):
    """Return ``(R, R^{-1}, lam)`` with ``R^T Z R = R^{-1} X R^{-T} = diag(lam)``."""
    lx = np.linalg.cholesky(x)
    lz = np.linalg.cholesky(z)
    u, lam, vt = np.linalg.svd(lz.T @ lx)
    isq = lam ** -0.5
    r = lx @ vt.T * isq
    rinv = (isq[:, None] * u.T) @ lz.T
    return r, rinv, lam


def _max_step(lam: np.ndarray, dtilde: np.ndarray) -> float:
    """Largest ``a`` with ``diag(lam) + a * dtilde`` PSD (inf if unbounded)."""
    isq = lam ** -0.5
    lo = float(np.linalg.eigvalsh(isq[:, None] * dtilde * isq[None, :])[0])
    return np.inf if lo >= 0 else -1.0 / lo


def _max_step_lp(lam: np.ndarray, d: np.ndarray) -> float:
    neg = d < 0
    return float(np.min(-lam[neg] / d[neg])) if np.any(neg) else np.inf


class IpmResult:
    def __init__(self, status, it, xf, xl, xs, y, zl, zs, pres, dres, gap, pobj, dobj, message="", witness=None):
        self.status = status
        self.iterations = it
        self.xf, self.xl, self.xs = xf, xl, xs
        self.y, self.zl, self.zs = y, zl, zs
        self.pres, self.dres, self.gap = pres, dres, gap
        self.pobj, self.dobj = pobj, dobj
        self.message = message
        self.witness = witness


def _initial_scale(sf: StandardForm) -> tuple[float, float]:
    bmax = np.max(np.abs(sf.b)) if sf.m else 0.0
    cmax = max([np.max(np.abs(sf.c_lp)) if sf.c_lp.size else 0.0]
               + [np.max(np.abs(bl.cost)) if bl.cost.size else 0.0 for bl in sf.blocks] + [0.0])
    n = max(sf.degree, 1)
    return max(1.0, np.sqrt(n), 1 + bmax), max(1.0, np.sqrt(n), 1 + cmax)


def _infeasibility_ray(sf: StandardForm, y: np.ndarray, tol: float):
    """Dual iterates of an infeasible problem drift along ``-w`` for a Farkas vector ``w``."""
    viol = farkas_violation(sf, -y)
    if viol > tol:
        return None
    return -y / abs(float(sf.b @ y)), viol


def run_ipm(sf: StandardForm, settings: Settings) -> IpmResult:
    m = sf.m
    nf, nl = sf.a_free.shape[1], sf.a_lp.shape[1]
    nu = max(sf.degree, 1)
    xi, eta = _initial_scale(sf)
    it_ = _Iterate(
        xf=np.zeros(nf),
        xl=np.full(nl, xi),
        zl=np.full(nl, eta),
        xs=[xi * np.eye(bl.size) for bl in sf.blocks],
        zs=[eta * np.eye(bl.size) for bl in sf.blocks],
        y=np.zeros(m),
    )
    bnorm = 1 + (np.max(np.abs(sf.b)) if m else 0.0)
    cnorm = 1 + max([np.max(np.abs(sf.c_free)) if nf else 0.0, np.max(np.abs(sf.c_lp)) if nl else 0.0]
                    + [np.max(np.abs(bl.cost)) for bl in sf.blocks])
    gamma = settings.step_fraction
    best = None
    stall = 0
    status, msg = Status.NUMERICAL_LIMIT, "iteration limit reached"
    it = 0
    for it in range(settings.max_iter + 1):
        xf, xl, zl, xs, zs, y = it_.xf, it_.xl, it_.zl, it_.xs, it_.zs, it_.y
        rp = sf.b - sf.apply(xf, xl, xs)
        rf = sf.c_free - sf.a_free.T @ y
        rl = sf.c_lp - sf.a_lp.T @ y - zl
        rs = [bl.cost - bl.adjoint(y) - z for bl, z in zip(sf.blocks, zs)]
        pobj = float(sf.c_free @ xf + sf.c_lp @ xl + sum(np.vdot(bl.cost, x) for bl, x in zip(sf.blocks, xs)))
        dobj = float(sf.b @ y)
        compl = float(xl @ zl + sum(np.vdot(x, z) for x, z in zip(xs, zs)))
        mu = compl / nu
        pres = float(np.max(np.abs(rp))) if m else 0.0
        dres = max([float(np.max(np.abs(rf))) if nf else 0.0, float(np.max(np.abs(rl))) if nl else 0.0]
                   + [float(np.max(np.abs(r))) for r in rs])
        gap = max(abs(pobj - dobj), compl)
        if settings.verbose:
            log.info("it %3d pobj %+.10e dobj %+.10e pres %.2e dres %.2e gap %.2e", it, pobj, dobj, pres, dres, gap)
        if pres <= settings.eps_feas * 0.1 and dres <= settings.eps_feas * cnorm and gap <= 0.1 * settings.eps_gap * (1 + abs(pobj)):
            status, msg = Status.OPTIMAL, "converged"
            break
        score = max(pres / settings.eps_feas, dres / (settings.eps_feas * cnorm), gap / (settings.eps_gap * (1 + abs(pobj))))
        if best is None or score < best[0]:
            best = (score, it, _Iterate(xf.copy(), xl.copy(), zl.copy(), [x.copy() for x in xs], [z.copy() for z in zs], y.copy()),
                    pres, dres, gap, pobj, dobj)
        if np.linalg.norm(y) > 1e4:
            ray = _infeasibility_ray(sf, y, 1e-9 * bnorm)
            if ray is not None:
                return IpmResult(Status.INFEASIBLE, it, xf, xl, xs, y, zl, zs, pres, dres, gap, pobj, dobj,
                                 "primal infeasible", witness=ray)
        if it == settings.max_iter:
            break
        try:
            scal = [_nt_scaling(x, z) for x, z in zip(xs, zs)]
        except np.linalg.LinAlgError:
            msg = "lost positive definiteness"
            break
        wl = np.sqrt(xl / zl)
        laml = np.sqrt(xl * zl)
        # Schur complement
        mat = (sf.a_lp * wl**2) @ sf.a_lp.T
        wmats = []
        for bl, (r, _, _) in zip(sf.blocks, scal):
            w = r @ r.T
            wmats.append(w)
            if len(bl.rows):
                waw = w @ bl.mats @ w
                k = len(bl.rows)
                mat[np.ix_(bl.rows, bl.rows)] += bl.mats.reshape(k, -1) @ waw.reshape(k, -1).T
        # tiny quasi-definite shift keeps free columns absent from every row solvable
        reg = 1e-14 * (1 + float(np.max(np.abs(np.diag(mat))))) if m else 1e-14
        kkt = np.block([[mat, sf.a_free], [sf.a_free.T, -reg * np.eye(nf)]])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", sla.LinAlgWarning)
                lu = sla.lu_factor(kkt, check_finite=True)
        except (ValueError, np.linalg.LinAlgError, sla.LinAlgWarning):
            msg = "singular Newton system"
            break

        def direction(dl, ds):
            rhs = rp - sf.a_lp @ (wl * dl - wl**2 * rl)
            for bl, (r, _, _), w, d, rr in zip(sf.blocks, scal, wmats, ds, rs):
                rhs -= bl.apply(r @ d @ r.T - w @ rr @ w, m)
            sol = sla.lu_solve(lu, np.concatenate([rhs, rf]))
            dy, dxf = sol[:m], sol[m:]
            dzl = rl - sf.a_lp.T @ dy
            dxl = wl * dl - wl**2 * dzl
            dzs, dxs, dxt, dzt = [], [], [], []
            for bl, (r, rinv, lam), w, d, rr in zip(sf.blocks, scal, wmats, ds, rs):
                dz = rr - bl.adjoint(dy)
                dx = r @ d @ r.T - w @ dz @ w
                dx = (dx + dx.T) / 2
                dzs.append(dz)
                dxs.append(dx)
                dxt.append(rinv @ dx @ rinv.T)
                dzt.append(r.T @ dz @ r)
            return dxf, dxl, dzl, dxs, dzs, dy, dxt, dzt

        def steps(dxl, dzl, dxt, dzt):
            ap = _max_step_lp(laml, dxl / wl) if nl else np.inf
            ad = _max_step_lp(laml, dzl * wl) if nl else np.inf
            for (_, _, lam), a, b in zip(scal, dxt, dzt):
                ap = min(ap, _max_step(lam, a))
                ad = min(ad, _max_step(lam, b))
            return ap, ad

        # predictor
        ds_aff = [-np.diag(lam) for (_, _, lam) in scal]
        dl_aff = -laml
        dxf, dxl, dzl, dxs, dzs, dy, dxt, dzt = direction(dl_aff, ds_aff)
        if not np.all(np.isfinite(dy)):
            msg = "singular Newton system"
            break
        ap, ad = steps(dxl, dzl, dxt, dzt)
        ap, ad = min(1.0, ap), min(1.0, ad)
        compl_aff = float((xl + ap * dxl) @ (zl + ad * dzl)
                          + sum(np.vdot(x + ap * a, z + ad * b) for x, z, a, b in zip(xs, zs, dxs, dzs)))
        sigma = float(np.clip((max(compl_aff, 0.0) / max(compl, 1e-300)) ** 3, 0.0, 1.0))
        # corrector
        dl = (sigma * mu - laml**2 - (dxl / wl) * (dzl * wl)) / laml
        ds = []
        for (_, _, lam), a, b in zip(scal, dxt, dzt):
            e = sigma * mu * np.eye(len(lam)) - np.diag(lam**2) - (a @ b + b @ a) / 2
            ds.append(2 * e / (lam[:, None] + lam[None, :]))
        dxf, dxl, dzl, dxs, dzs, dy, dxt, dzt = direction(dl, ds)
        if not np.all(np.isfinite(dy)):
            msg = "singular Newton system"
            break
        ap, ad = steps(dxl, dzl, dxt, dzt)
        ap, ad = min(1.0, gamma * ap), min(1.0, gamma * ad)
        if max(ap, ad) < 1e-12:
            stall += 1
            if stall > 3:
                msg = "step length collapsed"
                break
        it_ = _Iterate(
            xf + ap * dxf,
            xl + ap * dxl,
            zl + ad * dzl,
            [x + ap * a for x, a in zip(xs, dxs)],
            [z + ad * b for z, b in zip(zs, dzs)],
            y + ad * dy,
        )
    if status is Status.OPTIMAL:
        return IpmResult(status, it, xf, xl, xs, y, zl, zs, pres, dres, gap, pobj, dobj, msg)
    if m and np.linalg.norm(y) > 1.0:
        ray = _infeasibility_ray(sf, y, 1e-9 * bnorm)
        if ray is not None:
            return IpmResult(Status.INFEASIBLE, it, xf, xl, xs, y, zl, zs, pres, dres, gap, pobj, dobj,
                             "primal infeasible", witness=ray)
    if best is not None and best[0] <= 1.0:
        # faces without interior (e.g. a block forced to zero) break the Newton system
        # only after the tolerances have already been met
        status, msg = Status.OPTIMAL, f"converged to tolerance before breakdown ({msg})"
    _, bit, b_it, pres, dres, gap, pobj, dobj = best
    return IpmResult(status, bit, b_it.xf, b_it.xl, b_it.xs, b_it.y, b_it.zl, b_it.zs, pres, dres, gap, pobj, dobj, msg)


def _full_witness(sf: StandardForm, y: np.ndarray, m_full: int) -> np.ndarray:
    """Scatter a witness on the kept rows back onto every compiled row (dropped rows get 0)."""
    if sf.row_map is None or len(y) == m_full:
        return y
    out = np.zeros(m_full)
    out[sf.row_map] = y
    return out


def _extract(p: SdpProblem, sf: StandardForm, xf, xl, xs):
    from ..hermitian import unembed_real

    blocks = {}
    for name, x in zip(sf.block_names, xs):
        x = (x + x.T) / 2
        blocks[name] = unembed_real(x) if p.blocks[name].hermitian else x
    scalars = {}
    for name, (kind, idx, base, sgn) in sf.scalar_map.items():
        scalars[name] = float(xf[idx]) if kind == "free" else float(base + sgn * xl[idx])
    return blocks, scalars


def _check_size(p: SdpProblem, settings: Settings):
    if p.dimension() > settings.max_dimension:
        raise MalformedProblem(f"problem has {p.dimension()} scalar degrees of freedom, limit is {settings.max_dimension}")


def solve(p: SdpProblem, settings: Settings | None = None) -> SdpSolution:
    """Optimise the problem's objective."""
    settings = settings or Settings()
    _check_size(p, settings)
    full = compile_problem(p)
    sf, witness = reduce_rows(full)
    if witness is not None:
        return SdpSolution(Status.INFEASIBLE, witness=witness, witness_violation=0.0,
                           message="inconsistent equality constraints")
    res = run_ipm(sf, settings)
    if res.status is Status.INFEASIBLE:
        yy, viol = res.witness
        return SdpSolution(Status.INFEASIBLE, iterations=res.iterations,
                           witness=_full_witness(sf, yy, full.m), witness_violation=viol, message=res.message)
    blocks, scalars = _extract(p, sf, res.xf, res.xl, res.xs)
    resid = p.residuals(blocks, scalars)
    pres = float(np.max(np.abs(resid))) if resid.size else 0.0
    obj = p.objective_value(blocks, scalars)
    status = res.status
    if status is Status.OPTIMAL and pres > settings.eps_feas:
        status = Status.NUMERICAL_LIMIT
        res.message = f"primal residual {pres:.2e} above tolerance after extraction"
    return SdpSolution(status, obj, blocks, scalars, pres, res.gap, res.iterations, message=res.message)


def feasibility(p: SdpProblem, settings: Settings | None = None) -> SdpSolution:
    """Decide feasibility by maximising a uniform PSD margin.

    Every PSD block ``X`` is written ``S + lam I`` and every bounded scalar
    ``u = s + lam`` with ``S, s`` in the cone; ``lam`` is maximised (capped at
    ``settings.margin_cap``).  A negative optimum comes with a Farkas vector
    ``y``: ``A^T y`` is PSD on the cone and ``b.y < 0``.
    """
    settings = settings or Settings()
    _check_size(p, settings)
    full = compile_problem(p, use_objective=False)
    sf, witness = reduce_rows(full)
    if witness is not None:
        return SdpSolution(Status.INFEASIBLE, witness=witness, witness_violation=0.0,
                           message="inconsistent equality constraints")
    m = sf.m
    ident = sf.a_lp @ np.ones(sf.a_lp.shape[1])
    for bl in sf.blocks:
        ident = ident + bl.apply(np.eye(bl.size), m)
    nl = sf.a_lp.shape[1]
    a_lp = np.zeros((m + 1, nl + 1))
    a_lp[:m, :nl] = sf.a_lp
    a_lp[m, nl] = 1.0
    a_free = np.zeros((m + 1, sf.a_free.shape[1] + 1))
    a_free[:m, :-1] = sf.a_free
    a_free[:m, -1] = ident
    a_free[m, -1] = 1.0
    c_free = np.zeros(a_free.shape[1])
    c_free[-1] = -1.0
    blocks = [_BlockData(bl.rows, bl.mats, np.zeros_like(bl.cost)) for bl in sf.blocks]
    msf = StandardForm(np.append(sf.b, settings.margin_cap), a_free, c_free, a_lp, np.zeros(nl + 1), blocks,
                       0.0, 1.0, sf.block_names, sf.scalar_map, sf.row_map)
    res = run_ipm(msf, settings)
    if res.status is Status.INFEASIBLE:
        return SdpSolution(Status.INFEASIBLE, iterations=res.iterations,
                           witness=_full_witness(sf, res.witness[0][:m], full.m),
                           witness_violation=res.witness[1], message=res.message)
    lam = float(res.xf[-1])
    xs = [x + lam * np.eye(x.shape[0]) for x in res.xs]
    xl = res.xl[:nl] + lam
    blocks, scalars = _extract(p, sf, res.xf[:-1], xl, xs)
    resid = p.residuals(blocks, scalars)
    pres = float(np.max(np.abs(resid))) if resid.size else 0.0
    if res.status is not Status.OPTIMAL:
        return SdpSolution(res.status, lam, blocks, scalars, pres, res.gap, res.iterations, margin=lam,
                           message=res.message)
    if lam >= -settings.eps_feas:
        return SdpSolution(Status.OPTIMAL, lam, blocks, scalars, pres, res.gap, res.iterations, margin=lam,
                           message="feasible")
    # Dual of the margin problem: A^T y PSD on the cone and b.y = margin < 0.
    y = -res.y[:m]
    viol = farkas_violation(sf, y)
    return SdpSolution(Status.INFEASIBLE, lam, blocks, scalars, pres, res.gap, res.iterations, margin=lam,
                       witness=_full_witness(sf, y, full.m), witness_violation=viol, message="negative margin")


def farkas_violation(sf: StandardForm, y: np.ndarray) -> float:
    """Distance of ``y`` from a Farkas certificate of primal infeasibility.

    A certificate has ``A_f^T y = 0``, ``A_l^T y >= 0``, ``A_k^*(y)`` PSD and
    ``b.y < 0``; after scaling to ``b.y = -1`` the largest violation of the
    first three conditions is returned (``inf`` if ``b.y >= 0``).
    """
    by = float(sf.b @ y)
    if by >= 0:
        return float("inf")
    y = y / -by
    viol = 0.0
    if sf.a_free.size:
        viol = max(viol, float(np.max(np.abs(sf.a_free.T @ y))))
    if sf.a_lp.size:
        viol = max(viol, -float(np.min(sf.a_lp.T @ y)))
    for bl in sf.blocks:
        if len(bl.rows):
            viol = max(viol, -float(np.linalg.eigvalsh(bl.adjoint(y))[0]))
    return viol
