"""Triple-modal molecular property regression with late fusion.

Three molecular views (SMILES token sequences, ECFP fingerprints,
molecular graphs) feed three trainable encoder heads; their scalar
outputs are combined by learned weights fitted on a held-out tuning
split.
"""

__version__ = "0.1.0"
