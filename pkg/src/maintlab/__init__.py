"""maintlab: a predictive-maintenance policy-optimization laboratory.

Synthetic device-fleet simulation, spectral + Fourier-operator feature
extraction over denoised sensor latents, group-graph embeddings, offline
clipped-PPO policy training, tabular Q-learning baselines, and an
evaluation/ablation/sweep harness with a CLI.
"""

__version__ = "0.1.0"
