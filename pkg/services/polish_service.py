"""
Polish service: optional rewriting of templated prompts by an external client.

Polishing never replaces structured facts; any client failure falls back to
the raw prompt with a logged warning.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import openai
import requests

from exceptions import PromptError

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0


class Polisher:
    name = 'base'

    def rewrite(self, raw_prompt: str) -> str:
        raise NotImplementedError


class IdentityPolisher(Polisher):
    name = 'identity'

    def rewrite(self, raw_prompt: str) -> str:
        return raw_prompt


class HttpPolisher(Polisher):
    """POST {raw_prompt} to a rewriting endpoint, expect {polished_prompt}"""
    name = 'http'

    def __init__(self, url: str, api_key: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT):
        if not url:
            raise PromptError('http polisher needs polisher.url')
        self.url = url
        self.api_key = api_key if api_key is not None else os.getenv('POLISHER_API_KEY')
        self.timeout = timeout
        self.headers = {'Content-Type': 'application/json'}
        if self.api_key:
            self.headers['Authorization'] = f'Bearer {self.api_key}'

    def rewrite(self, raw_prompt: str) -> str:
        response = requests.post(self.url, json={'raw_prompt': raw_prompt},
                                 headers=self.headers, timeout=self.timeout)
        if response.status_code != 200:
            raise PromptError(f"polisher returned HTTP {response.status_code}")
        polished = response.json().get('polished_prompt')
        if not isinstance(polished, str) or not polished.strip():
            raise PromptError('polisher response has no polished_prompt')
        return polished.strip()


class OpenAIPolisher(Polisher):
    name = 'openai'

    SYSTEM_PROMPT = """You rewrite image descriptions so they read naturally.
    Keep every object, count, color and spatial relation exactly as given.
    Do not add objects or details. Answer with the rewritten description only."""

    def __init__(self, model: str = 'gpt-3.5-turbo', api_key: Optional[str] = None,
                 timeout: float = DEFAULT_TIMEOUT):
        self.model = model
        self.api_key = api_key if api_key is not None else os.getenv('OPENAI_API_KEY')
        self.timeout = timeout

    def rewrite(self, raw_prompt: str) -> str:
        if not self.api_key:
            raise PromptError('OPENAI_API_KEY is not set')
        response = openai.ChatCompletion.create(
            model=self.model,
            messages=[
                {"role": "system", "content": self.SYSTEM_PROMPT},
                {"role": "user", "content": raw_prompt}
            ],
            max_tokens=200,
            temperature=0.7,
            api_key=self.api_key,
            request_timeout=self.timeout,
        )
        return response.choices[0].message.content.strip()


def build_polisher(provider: str = 'identity', url: str = '', model: str = 'gpt-3.5-turbo',
                   timeout: float = DEFAULT_TIMEOUT) -> Polisher:
    if provider == 'identity':
        return IdentityPolisher()
    if provider == 'http':
        return HttpPolisher(url, timeout=timeout)
    if provider == 'openai':
        return OpenAIPolisher(model=model, timeout=timeout)
    raise PromptError(f"unknown polisher provider {provider!r}")


@dataclass
class PolishOutcome:
    prompt: str
    warning: Optional[str] = None


def polish_outcome(prompt: str, polisher: Optional[Polisher] = None) -> PolishOutcome:
    if polisher is None or not prompt:
        return PolishOutcome(prompt)
    try:
        return PolishOutcome(polisher.rewrite(prompt))
    except Exception as e:
        warning = f"{polisher.name} polisher failed ({e}), keeping raw prompt"
        logger.warning(warning)
        return PolishOutcome(prompt, warning)


def polish(prompt: str, polisher: Optional[Polisher] = None) -> str:
    """Polished prompt, or the raw prompt when no client is set or the client fails"""
    return polish_outcome(prompt, polisher).prompt


def polish_many(prompts: Sequence[str], polisher: Optional[Polisher] = None,
                max_in_flight: int = 4) -> List[PolishOutcome]:
    """Polish independent prompts concurrently; results keep input order"""
    if polisher is None or isinstance(polisher, IdentityPolisher):
        return [PolishOutcome(p) for p in prompts]
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as executor:
        return list(executor.map(lambda p: polish_outcome(p, polisher), prompts))


class PolishService:
    """Applies the configured polisher to finished samples"""

    def __init__(self, polisher: Optional[Polisher] = None, max_in_flight: int = 4):
        self.polisher = polisher or IdentityPolisher()
        self.max_in_flight = max_in_flight

    @classmethod
    def from_config(cls, cfg) -> 'PolishService':
        polisher = build_polisher(cfg.provider, cfg.url, cfg.model, cfg.timeout)
        return cls(polisher, cfg.max_in_flight)

    def polish(self, prompt: str) -> str:
        return polish(prompt, self.polisher)

    def polish_samples(self, samples: Sequence) -> int:
        """Set each sample's prompt from its raw prompt; returns the number of fallbacks"""
        outcomes = polish_many([s.raw_prompt for s in samples], self.polisher, self.max_in_flight)
        fallbacks = 0
        for sample, outcome in zip(samples, outcomes):
            sample.prompt = outcome.prompt
            if outcome.warning:
                sample.metadata['polish_warning'] = outcome.warning
                fallbacks += 1
        return fallbacks
