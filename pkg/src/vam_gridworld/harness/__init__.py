# Training, rollouts, metrics, ablation and gap studies
