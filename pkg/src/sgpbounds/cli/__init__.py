"""Experiment orchestration: configs, data, hyperparameter search, runners and tables."""
