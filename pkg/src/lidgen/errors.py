"""Exception hierarchy for the dataset pipeline."""


class PipelineError(Exception):
    """Base class for fatal pipeline errors."""


class ConfigError(PipelineError):
    """Configuration file invalid or violates bounds."""


class SchemaMismatch(PipelineError):
    """Stage document has the wrong predecessor stage or schema version."""


class EmptyInput(PipelineError):
    """Predecessor stage produced zero records."""


class HostMismatch(PipelineError):
    """URL host does not match the robots policy origin."""


class XmlMalformed(PipelineError):
    """Sitemap body is not well-formed XML."""


class UnknownRootElement(PipelineError):
    """Sitemap XML root is neither <urlset> nor <sitemapindex>."""


class Disallowed(PipelineError):
    """Caller attempted to fetch a robots-disallowed URL."""


class HttpError(PipelineError):
    def __init__(self, status: int, url: str = ""):
        super().__init__(f"HTTP {status} for {url}")
        self.status = status
        self.url = url


class FetchTimeout(PipelineError):
    """Request timed out after all retries."""


class FatalConfig(PipelineError):
    """Shop cannot be crawled at all (no robots.txt and no sitemap override)."""


class EndpointError(PipelineError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"LLM endpoint error {status}: {detail}")
        self.status = status


class MalformedResponse(PipelineError):
    """LLM endpoint returned a body that is not chat-completion shaped."""


class FatalEndpoint(PipelineError):
    """LLM endpoint unreachable for every record in the stage."""


class NotAnImage(PipelineError):
    """Downloaded body does not sniff as a supported raster format."""


class DecodeFailed(PipelineError):
    """Image bytes sniffed OK but could not be decoded."""
