"""Robots Exclusion Protocol parser with longest-match rule precedence.

Semantics follow the modern interpretation (RFC 9309): rule groups are keyed
by user-agent product tokens, the most specific matching group wins, and
allow/disallow conflicts are resolved by the longest matching rule path with
allow winning ties. ``*`` and a terminal ``$`` are honored inside rule paths.

The parser is total: arbitrary byte garbage yields a policy (unparseable
lines are skipped and counted), never an exception.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from urllib.parse import urlparse

from .errors import HostMismatch

_DIRECTIVE_RE = re.compile(r"^\s*([A-Za-z][A-Za-z\-]*)\s*:\s*(.*?)\s*$")


@dataclass
class RuleGroup:
    user_agents: list[str] = field(default_factory=list)
    # (path pattern, allow?) in source order
    rules: list[tuple[str, bool]] = field(default_factory=list)
    crawl_delay: float | None = None


@dataclass
class RobotsPolicy:
    # Groups applicable to the queried user agent, most specific first;
    # the wildcard group is retained as fallback when a specific group exists.
    groups: list[RuleGroup] = field(default_factory=list)
    sitemap_urls: list[str] = field(default_factory=list)
    crawl_delay: float | None = None
    origin: str | None = None
    unparsed_lines: int = 0

    @property
    def active_rules(self) -> list[tuple[str, bool]]:
        """Rules of the most specific matching group (wildcard as fallback)."""
        if not self.groups:
            return []
        return self.groups[0].rules


def _is_valid_sitemap_url(value: str) -> bool:
    parsed = urlparse(value)
    return parsed.scheme in ("http", "https") and bool(parsed.netloc)


def _agent_match_length(pattern: str, user_agent: str) -> int | None:
    """Specificity of a user-agent pattern against a UA string, or None.

    ``*`` matches anything with specificity 0; otherwise a case-insensitive
    substring match scores the pattern's length.
    """
    pattern = pattern.strip().lower()
    if pattern == "*":
        return 0
    if pattern and pattern in user_agent.lower():
        return len(pattern)
    return None


def parse_robots(text: str, user_agent: str, origin: str | None = None) -> RobotsPolicy:
    """Parse a raw robots.txt body for one crawler identity.

    Returns the rule groups applicable to ``user_agent``: the most specific
    matching group first, plus the wildcard group as fallback. Sitemap
    directives are global and collected regardless of grouping.
    """
    if text and text[0] == "﻿":
        text = text[1:]

    all_groups: list[RuleGroup] = []
    sitemaps: list[str] = []
    unparsed = 0
    current: RuleGroup | None = None
    # consecutive User-agent lines accumulate onto one group
    agents_open = False

    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0]
        if not line.strip():
            continue
        m = _DIRECTIVE_RE.match(line)
        if not m:
            unparsed += 1
            continue
        directive = m.group(1).lower()
        value = m.group(2)

        if directive == "user-agent":
            if not value:
                unparsed += 1
                continue
            if not agents_open:
                current = RuleGroup()
                all_groups.append(current)
                agents_open = True
            current.user_agents.append(value)
        elif directive in ("allow", "disallow"):
            agents_open = False
            if current is None:
                unparsed += 1  # rule outside any group
                continue
            if value == "":
                # empty Disallow/Allow matches nothing; legal but inert
                continue
            current.rules.append((value, directive == "allow"))
        elif directive == "crawl-delay":
            agents_open = False
            if current is None:
                unparsed += 1
                continue
            try:
                current.crawl_delay = float(value)
            except ValueError:
                unparsed += 1
        elif directive == "sitemap":
            agents_open = False
            if _is_valid_sitemap_url(value):
                if value not in sitemaps:
                    sitemaps.append(value)
            else:
                unparsed += 1
        else:
            # unknown directives (Host, Clean-param, ...) are skipped silently
            agents_open = False

    best_len = -1
    for group in all_groups:
        for pattern in group.user_agents:
            length = _agent_match_length(pattern, user_agent)
            if length is not None and length > best_len:
                best_len = length

    applicable: list[RuleGroup] = []
    if best_len > 0:
        specific = [
            g
            for g in all_groups
            if any(_agent_match_length(p, user_agent) == best_len for p in g.user_agents)
        ]
        wildcard = [g for g in all_groups if any(p.strip() == "*" for p in g.user_agents)]
        applicable = _merge_groups(specific) + _merge_groups(wildcard)
    elif best_len == 0:
        wildcard = [g for g in all_groups if any(p.strip() == "*" for p in g.user_agents)]
        applicable = _merge_groups(wildcard)

    delay = applicable[0].crawl_delay if applicable else None
    return RobotsPolicy(
        groups=applicable,
        sitemap_urls=sitemaps,
        crawl_delay=delay,
        origin=origin,
        unparsed_lines=unparsed,
    )


def _merge_groups(groups: list[RuleGroup]) -> list[RuleGroup]:
    """Merge groups sharing the same effective user agent into one."""
    if not groups:
        return []
    merged = RuleGroup()
    for g in groups:
        merged.user_agents.extend(g.user_agents)
        merged.rules.extend(g.rules)
        if merged.crawl_delay is None:
            merged.crawl_delay = g.crawl_delay
    return [merged]


def _rule_matches(pattern: str, path: str) -> bool:
    """Match a robots rule path against a URL path; ``*`` wildcard, ``$`` anchor."""
    anchored = pattern.endswith("$")
    if anchored:
        pattern = pattern[:-1]
    parts = [re.escape(p) for p in pattern.split("*")]
    regex = ".*".join(parts)
    if anchored:
        regex += r"\Z"
    return re.match(regex, path) is not None


def is_allowed(policy: RobotsPolicy, url: str) -> bool:
    """Longest-path-match between allow and disallow rules; no match = allowed."""
    parsed = urlparse(url)
    if policy.origin is not None:
        origin_host = urlparse(policy.origin).netloc
        if origin_host and parsed.netloc and parsed.netloc != origin_host:
            raise HostMismatch(f"{url} is not on origin {policy.origin}")
    path = parsed.path or "/"
    if parsed.query:
        path += "?" + parsed.query

    best_len = -1
    best_allow = True
    for pattern, allow in policy.active_rules:
        if _rule_matches(pattern, path):
            # specificity = pattern length; allow wins ties
            length = len(pattern)
            if length > best_len or (length == best_len and allow and not best_allow):
                best_len = length
                best_allow = allow
    return best_allow
