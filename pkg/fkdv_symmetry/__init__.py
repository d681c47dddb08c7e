"""Lie symmetries, similarity reductions and exact solutions of
u_t + u^n u_x + alpha(t) u + beta(t) u_xxxxx = 0."""

__version__ = "1.0.0"
