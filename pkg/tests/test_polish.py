"""
Tests for optional prompt polishing and its raw-prompt fallback
"""

import threading

import numpy as np
import pytest
import requests

from config import PolisherConfig
from exceptions import PromptError
from models import Sample, TaskFamily
from services import polish_service
from services.polish_service import (HttpPolisher, IdentityPolisher, OpenAIPolisher, Polisher,
                                     PolishService, build_polisher, polish, polish_many, polish_outcome)


class FakeResponse:
    def __init__(self, status_code, payload):
        self.status_code = status_code
        self._payload = payload

    def json(self):
        return self._payload


class UpperPolisher(Polisher):
    name = 'upper'

    def __init__(self):
        self.threads = set()

    def rewrite(self, raw_prompt):
        self.threads.add(threading.get_ident())
        return raw_prompt.upper()


class BrokenPolisher(Polisher):
    name = 'broken'

    def rewrite(self, raw_prompt):
        raise RuntimeError('service unavailable')


def test_identity_and_none():
    assert polish('A red ball.') == 'A red ball.'
    assert polish('A red ball.', IdentityPolisher()) == 'A red ball.'
    assert polish('', UpperPolisher()) == ''


def test_failure_falls_back_to_raw_prompt():
    outcome = polish_outcome('A red ball.', BrokenPolisher())
    assert outcome.prompt == 'A red ball.'
    assert 'service unavailable' in outcome.warning
    assert polish('A red ball.', BrokenPolisher()) == 'A red ball.'


def test_polish_many_keeps_order():
    prompts = [f"prompt {i}" for i in range(20)]
    outcomes = polish_many(prompts, UpperPolisher(), max_in_flight=4)
    assert [o.prompt for o in outcomes] == [p.upper() for p in prompts]
    assert all(o.warning is None for o in outcomes)


def test_http_polisher(monkeypatch):
    """The endpoint receives raw_prompt and answers polished_prompt"""
    calls = []

    def fake_post(url, json=None, headers=None, timeout=None):
        calls.append((url, json, headers, timeout))
        return FakeResponse(200, {'polished_prompt': '  A shiny red ball.  '})

    monkeypatch.setattr(requests, 'post', fake_post)
    polisher = HttpPolisher('http://polisher.local/rewrite', api_key='secret', timeout=3)
    assert polish('A red ball.', polisher) == 'A shiny red ball.'
    url, body, headers, timeout = calls[0]
    assert url == 'http://polisher.local/rewrite'
    assert body == {'raw_prompt': 'A red ball.'}
    assert headers['Authorization'] == 'Bearer secret'
    assert timeout == 3


@pytest.mark.parametrize('response', [
    FakeResponse(500, {}),
    FakeResponse(200, {'other': 'field'}),
    FakeResponse(200, {'polished_prompt': '   '}),
])
def test_http_polisher_bad_responses(monkeypatch, response):
    monkeypatch.setattr(requests, 'post', lambda *args, **kwargs: response)
    outcome = polish_outcome('A red ball.', HttpPolisher('http://polisher.local'))
    assert outcome.prompt == 'A red ball.'
    assert outcome.warning


def test_http_polisher_timeout(monkeypatch):
    def slow_post(*args, **kwargs):
        raise requests.Timeout('read timed out')

    monkeypatch.setattr(requests, 'post', slow_post)
    assert polish('A red ball.', HttpPolisher('http://polisher.local')) == 'A red ball.'


def test_openai_polisher_without_key(monkeypatch):
    monkeypatch.delenv('OPENAI_API_KEY', raising=False)
    outcome = polish_outcome('A red ball.', OpenAIPolisher())
    assert outcome.prompt == 'A red ball.'
    assert 'OPENAI_API_KEY' in outcome.warning


def test_openai_polisher(monkeypatch):
    class Message:
        content = ' Two blue boxes. '

    class Choice:
        message = Message()

    class Completion:
        choices = [Choice()]

    monkeypatch.setattr(polish_service.openai.ChatCompletion, 'create',
                        lambda **kwargs: Completion())
    assert polish('two blue boxes', OpenAIPolisher(api_key='key')) == 'Two blue boxes.'


def _samples(prompts):
    image = np.zeros((8, 8, 3), dtype=np.uint8)
    return [Sample(task=TaskFamily.T2I_SHAPES, seed=i, target=image, prompt='', raw_prompt=p, metadata={})
            for i, p in enumerate(prompts)]


def test_polish_service_updates_samples():
    samples = _samples(['a red ball', 'two boxes'])
    service = PolishService(UpperPolisher(), max_in_flight=2)
    assert service.polish_samples(samples) == 0
    assert [s.prompt for s in samples] == ['A RED BALL', 'TWO BOXES']
    assert [s.raw_prompt for s in samples] == ['a red ball', 'two boxes']
    assert service.polish('kite') == 'KITE'


def test_polish_service_counts_fallbacks():
    samples = _samples(['a red ball', ''])
    assert PolishService(BrokenPolisher()).polish_samples(samples) == 1
    assert samples[0].prompt == 'a red ball'
    assert 'service unavailable' in samples[0].metadata['polish_warning']
    assert 'polish_warning' not in samples[1].metadata


def test_polish_service_from_config():
    service = PolishService.from_config(PolisherConfig())
    assert isinstance(service.polisher, IdentityPolisher)
    assert service.max_in_flight == 4
    samples = _samples(['kept as is'])
    service.polish_samples(samples)
    assert samples[0].prompt == 'kept as is'
    with pytest.raises(PromptError):
        PolishService.from_config(PolisherConfig(provider='http'))


def test_build_polisher():
    assert isinstance(build_polisher('identity'), IdentityPolisher)
    assert isinstance(build_polisher('http', url='http://x'), HttpPolisher)
    assert isinstance(build_polisher('openai'), OpenAIPolisher)
    with pytest.raises(PromptError):
        build_polisher('http')
    with pytest.raises(PromptError):
        build_polisher('carrier-pigeon')


if __name__ == '__main__':
    pytest.main([__file__])
