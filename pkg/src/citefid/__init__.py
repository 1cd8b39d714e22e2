"""Citation fidelity pipeline.

Measures how faithfully citing sentences report claims from cited papers,
then runs two corpus-level analyses: a regression of fidelity on proximity,
team, and accessibility factors, and a matched quasi-experiment on
intermediary citations.
"""

__version__ = "0.1.0"
