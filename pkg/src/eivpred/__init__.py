"""Best mean-squared-error prediction in structural errors-in-variables
regression models: parameter transforms, least-squares estimators,
confidence regions, and a Monte Carlo verification harness."""

__version__ = "0.1.0"
