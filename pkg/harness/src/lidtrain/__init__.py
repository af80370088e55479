"""Transfer learning on frozen dual-encoder vision-language backbones.

Consumes the dataset pipeline's ``manifest.json`` + ``images/`` contract and
provides prompt-context tuning, adapter blocks, in-batch contrastive
training with k-fold evaluation, prompt scoring, and language-guided
segmentation.
"""

__version__ = "0.1.0"
