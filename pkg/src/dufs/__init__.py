"""Differentiable unsupervised feature selection with stochastic gates."""
