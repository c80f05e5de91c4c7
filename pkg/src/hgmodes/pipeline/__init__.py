"""Augmentation, training, evaluation and hyperparameter search."""
