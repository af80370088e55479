"""Exception hierarchy for the training and evaluation harness."""


class HarnessError(Exception):
    """Base class for all harness failures."""


class DimensionMismatch(HarnessError):
    """A feature vector does not match the module it was fed into."""


class EmptyLabel(HarnessError):
    """A text input was empty after tokenization."""


class DegenerateBatch(HarnessError):
    """The contrastive loss received an empty batch."""


class TooFewSamples(HarnessError):
    """Fewer samples than folds were given to the splitter."""


class BackboneMissing(HarnessError):
    """Pretrained backbone weights are not available locally."""


class EmptyField(HarnessError):
    """The selected manifest field is empty for every sample."""


class EmptyPromptSet(HarnessError):
    """score_prompts needs at least one prompt."""


class MaskGeneratorMissing(HarnessError):
    """The configured mask-generator weights are not available locally."""
