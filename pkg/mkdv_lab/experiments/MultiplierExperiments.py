import itertools
import logging
import math

from mkdv_lab.core.Dynamics import cumulative_j1
from mkdv_lab.core.Norms import lwp_admissible
from mkdv_lab.experiments.Base import BaseExperiments, ExperimentReport, merge_thresholds, new_report, stamp

logger = logging.getLogger(__name__)

MULTIPLIER_THRESHOLDS = {'change_tolerance': 0.05}
# consecutive doublings that must stay below the tolerance
STABLE_DOUBLINGS = 2


def aitken_limit(values) -> float:
    """Aitken delta-squared extrapolation from the last three partial sums."""
    if len(values) < 3:
        return values[-1] if values else 0.0
    a, b, c = values[-3:]
    denominator = (c - b) - (b - a)
    if denominator == 0 or not math.isfinite(denominator):
        return c
    return c - (c - b) ** 2 / denominator


def doubling_changes(values) -> list[float]:
    """Relative change of the partial sum over each truncation step."""
    return [abs(b - a) / abs(a) if a else math.inf for a, b in zip(values, values[1:])]


def is_stabilised(values, tolerance: float) -> bool:
    changes = doubling_changes(values)
    return len(changes) >= STABLE_DOUBLINGS and max(changes[-STABLE_DOUBLINGS:]) < tolerance


def exp_multiplier_probe(s_list, p_list, n_list, K_list, thresholds: dict | None = None) -> ExperimentReport:
    """``J'_1(n)`` over the grid ``s_list x p_list x n_list`` for every truncation in ``K_list``.

    A pair inside the local well-posedness range passes when, for every ``n``,
    the last two truncation doublings each change the sum by less than
    ``change_tolerance``. Pairs outside the range are reported without a
    verdict. The Aitken extrapolation is reported but never decides a verdict.
    """
    thresholds = merge_thresholds(MULTIPLIER_THRESHOLDS, thresholds)
    tolerance = thresholds['change_tolerance']
    K_list = sorted(int(k) for k in K_list)
    report = new_report('multiplier_probe', {'s_list': list(s_list), 'p_list': list(p_list), 'n_list': list(n_list),
                                             'K_list': K_list}, thresholds)
    limits = []
    for s, p in itertools.product(s_list, p_list):
        rows, sup, aitken_sup, worst, unstable = [], 0.0, 0.0, 0.0, []
        for n in n_list:
            values = cumulative_j1(n, s, p, K_list) if K_list else []
            rows.extend((n, k, v) for k, v in zip(K_list, values))
            changes = doubling_changes(values)
            recent = changes[-STABLE_DOUBLINGS:]
            limit = aitken_limit(values)
            limits.append((s, p, n, values[-1] if values else 0.0, limit,
                           recent[0] if len(recent) == STABLE_DOUBLINGS else None, recent[-1] if recent else None))
            sup = max(sup, values[-1] if values else 0.0)
            aitken_sup = max(aitken_sup, limit)
            worst = max(worst, max(recent, default=math.inf))
            if not is_stabilised(values, tolerance):
                unstable.append(n)
            logger.debug('J1(n=%s; s=%s, p=%s): %s', n, s, p, values)
        label = f's{s:g}_p{p:g}'
        report.add_series(f'j1_{label}', ('n', 'K', 'value'), rows)
        report.add_scalar(f'sup_{label}', sup)
        report.add_scalar(f'aitken_sup_{label}', aitken_sup)
        if not lwp_admissible(s, p):
            report.notes.append(f'(s, p) = ({s:g}, {p:g}) outside the well-posedness range, no verdict')
        elif unstable:
            detail = f'not stabilised up to K = {K_list[-1] if K_list else 0} at n = {", ".join(map(str, unstable))}'
            report.notes.append(f'(s, p) = ({s:g}, {p:g}): {detail}')
            report.add_verdict(f'stabilised_{label}', False, worst, 'change_tolerance', detail)
        else:
            report.add_verdict(f'stabilised_{label}', True, worst, 'change_tolerance',
                               f'last {STABLE_DOUBLINGS} doublings below tolerance for every n')
        logger.info('J1 sup over n for s = %s, p = %s: %.6g (Aitken %.6g)', s, p, sup, aitken_sup)
    report.add_series('limits', ('s', 'p', 'n', 'last', 'aitken', 'previous_change', 'last_change'), limits)
    return stamp(report)


class MultiplierExperiments(BaseExperiments):

    @property
    def multiplier_probe_experiment(self):
        """Truncated J'_1(n) sums under K-doubling for each (s, p)."""
        params = self.resolve({'s_list': (0.5, 0.75), 'p_list': (2.0, 8.0), 'n_list': (0, 32, -32, 256, -256),
                               'K_list': (64, 128, 256, 512)})
        report = exp_multiplier_probe(params['s_list'], params['p_list'], params['n_list'], params['K_list'],
                                      self.config.thresholds)
        return self.finish(report)
