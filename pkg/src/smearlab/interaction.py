"""Finite-range interactions Phi(t, Z) on site graphs.

An interaction is a list of terms, each a Hermitian local operator with a
smooth real coefficient path in the parameter t.  Terms sharing a support
set are summed before norms are taken.  The weighted norm

    ||Phi||_b = sup_t max_z sum_{Z containing z} ||Phi(t, Z)|| e^{b diam Z}

is evaluated with the sup over t on a finite grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    LocalOperator,
    embed,
    is_hermitian,
    pauli_string,
    schatten_norm,
)
from .lattice import Region, SiteGraph

__all__ = [
    "PolyPath",
    "TrigRampPath",
    "as_path",
    "InteractionTerm",
    "Interaction",
    "interaction_norm",
    "tfim",
    "xy_charge",
    "local_perturbation",
    "custom_model",
]


class PolyPath:
    """Polynomial coefficient c(s) = sum_k coeffs[k] s^k with exact
    derivative."""

    def __init__(self, coeffs):
        self.coeffs = tuple(float(c) for c in np.atleast_1d(coeffs))
        if not self.coeffs:
            raise ValueError("empty coefficient list")

    def __call__(self, s):
        return float(np.polynomial.polynomial.polyval(s, self.coeffs))

    def derivative(self, s):
        dcoeffs = np.polynomial.polynomial.polyder(self.coeffs)
        if len(dcoeffs) == 0:
            return 0.0
        return float(np.polynomial.polynomial.polyval(s, dcoeffs))

    def __repr__(self):
        return f"PolyPath({list(self.coeffs)})"


class TrigRampPath:
    """Smooth ramp a -> b: c(s) = a + (b-a)(1 - cos(pi s))/2 on [0, 1]."""

    def __init__(self, start, end):
        self.start = float(start)
        self.end = float(end)

    def __call__(self, s):
        return self.start + (self.end - self.start) * (1.0 - np.cos(np.pi * s)) / 2.0

    def derivative(self, s):
        return (self.end - self.start) * np.pi * np.sin(np.pi * s) / 2.0

    def __repr__(self):
        return f"TrigRampPath({self.start}, {self.end})"


def as_path(value):
    """Coerce a scalar or (coeff list) into a path object."""
    if hasattr(value, "derivative") and callable(value):
        return value
    if np.isscalar(value):
        return PolyPath([value])
    return PolyPath(value)


@dataclass(frozen=True)
class InteractionTerm:
    """One interaction term: Hermitian local operator times a real path."""

    operator: LocalOperator
    path: object

    def __post_init__(self):
        if not is_hermitian(self.operator.matrix, tol=1e-10):
            raise ValueError("interaction terms must be Hermitian")
        object.__setattr__(self, "path", as_path(self.path))

    @property
    def sites(self):
        return self.operator.sites

    def coefficient(self, t):
        return self.path(t)

    def coefficient_derivative(self, t):
        return self.path.derivative(t)


class Interaction:
    """Collection of interaction terms over a fixed parameter interval."""

    def __init__(self, graph, terms, interval=(0.0, 1.0), label=""):
        if not isinstance(graph, SiteGraph):
            raise TypeError("graph must be a SiteGraph")
        self.graph = graph
        self.terms = tuple(terms)
        self.interval = (float(interval[0]), float(interval[1]))
        self.label = label
        for term in self.terms:
            if term.sites and term.sites[-1] >= graph.n_sites:
                raise ValueError("term support outside the graph")

    @property
    def n_sites(self):
        return self.graph.n_sites

    @property
    def dim(self):
        return 2**self.graph.n_sites

    def hamiltonian(self, t=0.0):
        """Dense H(t) = sum_Z Phi(t, Z)."""
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self.terms:
            c = term.coefficient(t)
            if c != 0.0:
                H += c * term.operator.embed(self.n_sites)
        return H

    def hamiltonian_derivative(self, t):
        """Dense dH/dt, using the exact path derivatives."""
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for term in self.terms:
            c = term.coefficient_derivative(t)
            if c != 0.0:
                H += c * term.operator.embed(self.n_sites)
        return H

    def derivative_snapshot(self, t):
        """Interaction whose constant coefficients are dPhi/dt at t.

        Terms whose derivative vanishes at t are dropped.
        """
        frozen = []
        for term in self.terms:
            c = term.coefficient_derivative(t)
            if c != 0.0:
                frozen.append(InteractionTerm(term.operator, PolyPath([c])))
        return Interaction(self.graph, frozen, self.interval, self.label + "'")

    def snapshot(self, t):
        """Interaction with coefficients frozen at parameter t."""
        frozen = [
            InteractionTerm(term.operator, PolyPath([term.coefficient(t)]))
            for term in self.terms
            if term.coefficient(t) != 0.0
        ]
        return Interaction(self.graph, frozen, self.interval, self.label)

    def grouped_terms(self, t):
        """Pairs (support tuple, Phi(t, Z)) with same-support terms summed."""
        groups = {}
        for term in self.terms:
            c = term.coefficient(t)
            if c == 0.0:
                continue
            mat = c * term.operator.matrix
            key = term.sites
            if key in groups:
                groups[key] = groups[key] + mat
            else:
                groups[key] = mat
        return [
            (sites, LocalOperator(sites, mat)) for sites, mat in sorted(groups.items())
        ]

    def norm(self, b, t_samples=21):
        return interaction_norm(self, b, t_samples)

    def __repr__(self):
        return (
            f"Interaction({self.label or 'anonymous'}, "
            f"{len(self.terms)} terms on {self.graph.label})"
        )


def interaction_norm(phi, b, t_samples=21):
    """Weighted norm ||Phi||_b with the parameter sup taken on a grid.

    `t_samples` may be an integer (uniform grid on the interval) or an
    explicit array of parameter values.  The grid sup is a lower bound for
    the true sup; polynomially and trigonometrically varying coefficients
    are tame enough on 21 points for the bound checks downstream.
    """
    if np.isscalar(t_samples):
        lo, hi = phi.interval
        grid = np.linspace(lo, hi, int(t_samples))
    else:
        grid = np.asarray(t_samples, dtype=float)
    if b < 0:
        raise ValueError("the weight exponent b must be nonnegative")
    worst = 0.0
    for t in grid:
        per_site = np.zeros(phi.graph.n_sites)
        for sites, op in phi.grouped_terms(t):
            region = Region(phi.graph, sites)
            w = schatten_norm(op.matrix, np.inf) * np.exp(b * region.diameter)
            for z in sites:
                per_site[z] += w
        worst = max(worst, float(per_site.max()) if per_site.size else 0.0)
    return worst


def tfim(graph, j=1.0, g=1.0):
    """Transverse-field Ising model -J sum sz sz - g sum sx.

    Both couplings may be scalars or coefficient paths.
    """
    jp, gp = as_path(j), as_path(g)
    terms = []
    for a, bnd in graph.edges:
        zz = pauli_string("ZZ", (a, bnd))
        terms.append(InteractionTerm(zz, _scaled(jp, -1.0)))
    for x in graph.sites():
        terms.append(InteractionTerm(pauli_string("X", (x,)), _scaled(gp, -1.0)))
    return Interaction(graph, terms, label=f"tfim(J={j!r},g={g!r})")


def xy_charge(graph, j=1.0, h=1.0):
    """Charge-conserving XY model: hopping J (s+ s- + s- s+) plus onsite
    charge h n_x with n = (1 - sz)/2.  Commutes with the total charge.
    """
    jp, hp = as_path(j), as_path(h)
    hop = np.zeros((4, 4), dtype=complex)
    hop[1, 2] = hop[2, 1] = 1.0  # |01><10| + |10><01|
    n1 = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    terms = []
    for a, b in graph.edges:
        terms.append(InteractionTerm(LocalOperator((a, b), hop), jp))
    for x in graph.sites():
        terms.append(InteractionTerm(LocalOperator((x,), n1), hp))
    return Interaction(graph, terms, label=f"xy_charge(J={j!r},h={h!r})")


def local_perturbation(base, operator, strength=PolyPath([0.0, 1.0])):
    """Base interaction plus a locally supported perturbation term.

    `operator` is a Hermitian LocalOperator; `strength` a path (default:
    linear switch-on s).  The base keeps its own parameter dependence.
    """
    term = InteractionTerm(operator, strength)
    label = f"{base.label}+pert@{operator.sites}"
    return Interaction(base.graph, base.terms + (term,), base.interval, label)


def custom_model(graph, term_specs):
    """Interaction from (pauli label, sites, path) triples."""
    terms = []
    for label, sites, path in term_specs:
        terms.append(InteractionTerm(pauli_string(label, sites), as_path(path)))
    return Interaction(graph, terms, label="custom")


class _scaled:
    """Path scaled by a constant, keeping the exact derivative."""

    def __init__(self, path, factor):
        self.path = path
        self.factor = float(factor)

    def __call__(self, s):
        return self.factor * self.path(s)

    def derivative(self, s):
        return self.factor * self.path.derivative(s)

    def __repr__(self):
        return f"{self.factor}*{self.path!r}"
