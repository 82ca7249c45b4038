from .fitting import ObjectiveValue, fit_face, fit_objective, neutral_sampler

__all__ = ["ObjectiveValue", "fit_face", "fit_objective", "neutral_sampler"]
