"""Attacker models and the Monte Carlo engine behind the security numbers.

Simulations run against a real in-process AuthServer so every trial
exercises the production registration/login code paths.  Full-scale
(k=26, m=6) rates are unobservable by simulation and are reported
analytically alongside the desk-scale empirical runs.
"""

from __future__ import annotations

import math
import random
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

from .config import FAST_KDF, LockoutPolicy, SchemeConfig, ServiceConfig
from .pack import Portfolio, PortfolioSet, generate_fixture, load_pack
from .scheme import assign_credential, next_portfolio
from .service.core import AuthServer
from .store import CredentialStore, Keyring


@dataclass(frozen=True)
class AttackProfile:
    """Desk-scale scheme configuration a simulation runs against."""

    name: str
    k: int
    m: int
    n: int  # portfolios in the pack
    lockout: LockoutPolicy = field(default_factory=lambda: LockoutPolicy(enabled=False))


PROFILES = {
    "k1m1": AttackProfile("k1m1", k=1, m=1, n=4),
    "k2m1": AttackProfile("k2m1", k=2, m=1, n=6),
    "k4m2": AttackProfile("k4m2", k=4, m=2, n=10),
    "k9m3": AttackProfile("k9m3", k=9, m=3, n=12),
    "k4m2-lockout3": AttackProfile(
        "k4m2-lockout3",
        k=4,
        m=2,
        n=10,
        lockout=LockoutPolicy(enabled=True, max_failures=3, backoff_seconds=(3600.0,)),
    ),
}


@dataclass(frozen=True)
class AttackReport:
    model: str
    profile: str
    k: int
    m: int
    n: int
    trials: int
    successes: int
    empirical_rate: float
    analytic_rate: float
    ci3_low: float
    ci3_high: float
    seed: int
    extra: dict = field(default_factory=dict)

    def within_3_sigma(self) -> bool:
        return self.ci3_low <= self.empirical_rate <= self.ci3_high

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "profile": self.profile,
            "config": {"k": self.k, "m": self.m, "n": self.n},
            "trials": self.trials,
            "successes": self.successes,
            "empirical_rate": self.empirical_rate,
            "analytic_rate": self.analytic_rate,
            "ci_3sigma": [self.ci3_low, self.ci3_high],
            "within_3_sigma": self.within_3_sigma(),
            "seed": self.seed,
            "extra": self.extra,
        }

    def format_text(self) -> str:
        lines = [
            f"model            {self.model}",
            f"profile          {self.profile} (k={self.k}, m={self.m}, N={self.n})",
            f"trials           {self.trials}",
            f"successes        {self.successes}",
            f"empirical rate   {self.empirical_rate:.6g}",
            f"analytic rate    {self.analytic_rate:.6g}",
            f"3-sigma band     [{self.ci3_low:.6g}, {self.ci3_high:.6g}]"
            f"  {'OK' if self.within_3_sigma() else 'OUT OF BAND'}",
            f"seed             {self.seed}",
        ]
        for key, value in sorted(self.extra.items()):
            lines.append(f"{key:<16} {value}")
        return "\n".join(lines)


def _report(
    model: str,
    profile: AttackProfile,
    trials: int,
    successes: int,
    analytic: float,
    seed: int,
    extra: dict | None = None,
) -> AttackReport:
    sigma = math.sqrt(analytic * (1 - analytic) / trials) if trials else 0.0
    return AttackReport(
        model=model,
        profile=profile.name,
        k=profile.k,
        m=profile.m,
        n=profile.n,
        trials=trials,
        successes=successes,
        empirical_rate=successes / trials if trials else 0.0,
        analytic_rate=analytic,
        ci3_low=analytic - 3 * sigma,
        ci3_high=analytic + 3 * sigma,
        seed=seed,
        extra=extra or {},
    )


def two_proportion_z(successes_a: int, trials_a: int, successes_b: int, trials_b: int) -> float:
    """Pooled two-proportion z statistic."""
    pooled = (successes_a + successes_b) / (trials_a + trials_b)
    se = math.sqrt(pooled * (1 - pooled) * (1 / trials_a + 1 / trials_b))
    if se == 0:
        return 0.0
    return (successes_a / trials_a - successes_b / trials_b) / se


class Lab:
    """An in-process deployment with one enrolled user of known credential."""

    def __init__(self, profile: AttackProfile, seed: int, clock=None):
        self.profile = profile
        self.rng = random.Random(seed)
        self._tmp = tempfile.TemporaryDirectory(prefix="cuedauth-lab-")
        root = Path(self._tmp.name)
        generate_fixture(root / "pack", seed=seed, n=profile.n, k=profile.k)

        scheme = replace(
            SchemeConfig.for_test(profile.k, profile.m, lockout=profile.lockout),
            kdf=FAST_KDF,
        )
        self.config = ServiceConfig(
            scheme=scheme,
            data_dir=root / "data",
            pack_dir=root / "pack",
            admin_token="lab-admin",
            login_starts_per_minute=0,
            durable_writes=False,
        )
        self.config.data_dir.mkdir(parents=True)
        pset = load_pack(root / "pack", k=profile.k)
        store = CredentialStore(self.config.data_dir / "credentials.dat", durable=False)
        keyring = Keyring(self.config.data_dir / "prf_keys.json")
        kwargs = {"rng": random.Random(self.rng.getrandbits(64))}
        if clock is not None:
            kwargs["clock"] = clock
        self.server = AuthServer(self.config, pset, store, keyring, **kwargs)
        self.alphabet = scheme.alphabet
        self.user_id = "victim"
        self.known_ordinals: dict = {}
        self._enroll()

    def _enroll(self) -> None:
        """Register the victim, learning the assignment like a real user."""
        start = self.server.register_start(self.user_id)
        study = start.study
        while True:
            self.known_ordinals[study.portfolio.portfolio_id] = study.ordinal
            symbol = next(
                e.key_symbol
                for e in study.portfolio.entries
                if e.ordinal == study.ordinal
            )
            outcome = self.server.register_key(study.session_id, symbol)
            if outcome.state == "complete":
                break
            study = outcome.study

    def legit_login(self, record_transcript: bool = False):
        """Run one correct login; returns (success, typed symbols)."""
        view = self.server.login_start(self.user_id)
        symbols = []
        while view.state == "challenge":
            ordinal = self.known_ordinals[view.portfolio.portfolio_id]
            symbol = next(
                e.key_symbol for e in view.portfolio.entries if e.ordinal == ordinal
            )
            symbols.append(symbol)
            view = self.server.login_key(view.session_id, symbol)
        ok = self.server.login_finalize(view.session_id)
        return ok, symbols if record_transcript else []

    def close(self) -> None:
        self._tmp.cleanup()


def _attempt(server: AuthServer, user_id: str, choose_symbol) -> bool:
    """One full login attempt; choose_symbol(step, view) picks each entry."""
    view = server.login_start(user_id)
    step = 0
    while view.state == "challenge":
        view = server.login_key(view.session_id, choose_symbol(step, view))
        step += 1
    return server.login_finalize(view.session_id)


def simulate_random_guesser(
    profile: AttackProfile, trials: int, seed: int, lab: Lab | None = None
) -> AttackReport:
    """Uniform random key at each step; analytic success rate is k^-m."""
    own_lab = lab is None
    lab = lab or Lab(profile, seed)
    rng = random.Random(seed ^ 0x5EED)
    successes = 0
    for _ in range(trials):
        if _attempt(lab.server, lab.user_id, lambda s, v: rng.choice(lab.alphabet)):
            successes += 1
    report = _report(
        "random_guesser",
        profile,
        trials,
        successes,
        float(profile.k) ** -profile.m,
        seed,
        extra={"analytic_k26_m6": 26.0**-6},
    )
    if own_lab:
        lab.close()
    return report


def simulate_guessing_campaign(profile: AttackProfile, accounts: int, seed: int) -> AttackReport:
    """Random guessing against fresh accounts until the lockout trips.

    Per-account success probability is 1 - (1 - k^-m)^max_failures, which
    is bounded above by max_failures * k^-m.
    """
    if not profile.lockout.enabled:
        raise ValueError("campaign model needs a lockout-enabled profile")
    lab = Lab(profile, seed)
    rng = random.Random(seed ^ 0xCA4)
    per_attempt = float(profile.k) ** -profile.m
    attempts_allowed = profile.lockout.max_failures
    successes = 0
    for i in range(accounts):
        # fresh victim per campaign so lockout state never carries over
        user = f"campaign-{i}"
        _enroll_clone(lab, user)
        for _ in range(attempts_allowed):
            if _attempt(lab.server, user, lambda s, v: rng.choice(lab.alphabet)):
                successes += 1
                break
    analytic = 1.0 - (1.0 - per_attempt) ** attempts_allowed
    report = _report(
        "guessing_campaign",
        profile,
        accounts,
        successes,
        analytic,
        seed,
        extra={
            "upper_bound_max_times_rate": attempts_allowed * per_attempt,
            "attempts_per_account": attempts_allowed,
        },
    )
    lab.close()
    return report


def _enroll_clone(lab: Lab, user_id: str) -> None:
    start = lab.server.register_start(user_id)
    study = start.study
    while True:
        symbol = next(
            e.key_symbol for e in study.portfolio.entries if e.ordinal == study.ordinal
        )
        outcome = lab.server.register_key(study.session_id, symbol)
        if outcome.state == "complete":
            return
        study = outcome.study


def simulate_keylogger_replay(
    profile: AttackProfile, observed_sessions: int, trials: int, seed: int
) -> AttackReport:
    """Replay of typed letters from past sessions, screen unseen.

    Key bindings are resampled per render, so a replayed transcript maps
    to fresh uniform ordinals: no advantage over random guessing.
    """
    lab = Lab(profile, seed)
    rng = random.Random(seed ^ 0x10C)
    transcripts = []
    for _ in range(observed_sessions):
        ok, symbols = lab.legit_login(record_transcript=True)
        assert ok, "legitimate login must succeed"
        transcripts.append(symbols)

    successes = 0
    for _ in range(trials):
        transcript = rng.choice(transcripts) if transcripts else None
        if transcript is None:
            chooser = lambda s, v: rng.choice(lab.alphabet)
        else:
            chooser = lambda s, v: transcript[s]
        if _attempt(lab.server, lab.user_id, chooser):
            successes += 1

    # paired random-guesser run for the advantage test
    baseline = simulate_random_guesser(profile, trials, seed ^ 0xBA5E, lab=lab)
    z = two_proportion_z(successes, trials, baseline.successes, baseline.trials)
    report = _report(
        "keylogger_replay",
        profile,
        trials,
        successes,
        float(profile.k) ** -profile.m,
        seed,
        extra={
            "observed_sessions": observed_sessions,
            "baseline_successes": baseline.successes,
            "z_vs_random": z,
        },
    )
    lab.close()
    return report


def simulate_screen_observer(
    profile: AttackProfile,
    trials: int,
    seed: int,
    observation: str = "full",
) -> AttackReport:
    """Observer of one complete session.

    ``full``: screen and keyboard recorded together, so the mapping on
    screen decodes every typed key and the credential is recovered;
    success 1.0.  ``keys_only`` degrades to the keylogger model and
    ``screen_only`` to random guessing.
    """
    if observation not in ("full", "keys_only", "screen_only"):
        raise ValueError(f"unknown observation mode {observation!r}")
    if observation == "keys_only":
        report = simulate_keylogger_replay(profile, 1, trials, seed)
        return replace(
            report, model="screen_observer", extra={**report.extra, "observation": observation}
        )

    lab = Lab(profile, seed)
    rng = random.Random(seed ^ 0x5C4EE)
    learned: dict = {}
    if observation == "full":
        # watch one legit session: each render shows the mapping, the
        # keystroke picks out the keyword ordinal
        view = lab.server.login_start(lab.user_id)
        while view.state == "challenge":
            ordinal = lab.known_ordinals[view.portfolio.portfolio_id]
            symbol = next(
                e.key_symbol for e in view.portfolio.entries if e.ordinal == ordinal
            )
            learned[view.portfolio.portfolio_id] = ordinal
            view = lab.server.login_key(view.session_id, symbol)
        lab.server.login_finalize(view.session_id)

    def chooser(step, view):
        known = learned.get(view.portfolio.portfolio_id)
        if known is None:
            return rng.choice(lab.alphabet)
        return next(
            e.key_symbol for e in view.portfolio.entries if e.ordinal == known
        )

    successes = sum(
        1 for _ in range(trials) if _attempt(lab.server, lab.user_id, chooser)
    )
    analytic = 1.0 if observation == "full" else float(profile.k) ** -profile.m
    report = _report(
        "screen_observer",
        profile,
        trials,
        successes,
        analytic,
        seed,
        extra={"observation": observation},
    )
    lab.close()
    return report


def _bare_portfolio_set(n: int) -> PortfolioSet:
    return PortfolioSet(
        portfolios=tuple(
            Portfolio(portfolio_id=f"p{i + 1:02d}", category=f"c{i + 1}", entries=())
            for i in range(n)
        )
    )


def phishing_portfolio_guess(n: int, depth: int, trials: int, seed: int) -> AttackReport:
    """Chance of guessing the ordered first `depth` portfolios of a user."""
    rng = random.Random(seed)
    config = SchemeConfig.for_test(k=4, m=depth)
    pset = _bare_portfolio_set(n)
    key = rng.randbytes(32)
    ids = pset.ids()
    successes = 0
    for i in range(trials):
        cred = assign_credential(f"user-{i}", pset, config, key, rng)
        prefix = [pid for pid, _ in cred.sequence[:depth]]
        guess = rng.sample(ids, depth)
        if guess == prefix:
            successes += 1
    analytic = 1.0
    for j in range(depth):
        analytic /= n - j
    profile = AttackProfile(f"phish-N{n}", k=4, m=depth, n=n)
    return _report("phishing_portfolio_guess", profile, trials, successes, analytic, seed)


@dataclass(frozen=True)
class DivergenceStats:
    """Collision statistics between wrong-entry and true-next portfolios."""

    n: int
    depth: int  # portfolios already shown when the transition happens
    samples: int
    collisions: int
    empirical_rate: float
    analytic_rate: float  # 1 / candidates remaining

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def feedback_leak_probe(
    n: int, depth: int, k: int, chains: int, seed: int
) -> DivergenceStats:
    """Measure how often a wrong keyword lands on the true next portfolio.

    At a transition with ``depth`` portfolios already shown there are
    n - depth candidates, and wrong and correct entries draw from them
    independently, so the expected collision rate is 1/(n - depth).
    A depth of n - 1 forces equality: one candidate remains.
    """
    if not 1 <= depth <= n - 1:
        raise ValueError("depth must be in 1..n-1")
    rng = random.Random(seed)
    ids = [f"p{i + 1:02d}" for i in range(n)]
    samples = 0
    collisions = 0
    for chain_index in range(chains):
        key = rng.randbytes(32)
        user = f"probe-{chain_index}"
        visited = [rng.choice(ids)]
        while len(visited) < depth:
            step_ordinal = rng.randint(1, k)
            visited.append(
                next_portfolio(key, user, visited[-1], step_ordinal, visited, ids)
            )
        current = visited[-1]
        correct = rng.randint(1, k)
        true_next = next_portfolio(key, user, current, correct, visited, ids)
        for wrong in range(1, k + 1):
            if wrong == correct:
                continue
            wrong_next = next_portfolio(key, user, current, wrong, visited, ids)
            samples += 1
            if wrong_next == true_next:
                collisions += 1
    return DivergenceStats(
        n=n,
        depth=depth,
        samples=samples,
        collisions=collisions,
        empirical_rate=collisions / samples if samples else 0.0,
        analytic_rate=1.0 / (n - depth),
    )
