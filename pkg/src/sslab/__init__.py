"""sslab: a desk-scale self-supervised learning laboratory.

Multi-crop view geometry with pixel-scale calibration, three SSL
objectives (feature matching, clustering, contrastive) over a minimal
autodiff tensor engine, plus training and linear-probe / k-NN evaluation.
"""

__version__ = "0.1.0"
