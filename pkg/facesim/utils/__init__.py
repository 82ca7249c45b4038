__all__ = [
    "config",
    "errors",
    "imageio",
    "optim",
    "seeding",
    "structured_data",
    "types",
]
