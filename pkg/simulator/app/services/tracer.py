"""
事件驱动的波列追踪

连续部分：每个波列是两条边界之间的单色平面波。边界要么是以群速度运动的
自由包络边，要么附着在分束器世界线上。分束器在每个运动学片段起点、光学切换时刻
以及包络边到达时重新结算：
    入射  波峰与包络都趋近分束器，持续产生反射/透射波列
    产生  由入射波列产生；父波列不再入射或产物波改变时结束
    扫过  不入射也无法脱离，被分束器截断
结束的边界在群速度把它带离分束器时脱离为新的包络边。

离散部分：采样波前（相位 2πn·crest_spacing 的常相位面）在入射区间内与分束器的
交点，事后成对生成反射/透射事件。
"""
import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

from app.config import settings
from app.models.event import AttachMode, EdgeKind, EventKind, Side
from app.models.train import Boundary, BoundaryPiece, Train, TrainRole
from app.schemas.scenario import Scenario, SplitterSpec
from app.schemas.tracer import (
    Crest,
    EdgePiece,
    EnvelopeEdge,
    Event,
    SimulationResult,
    TrainSummary,
    WaveSegment,
)
from app.schemas.trajectory import CrestLine
from app.schemas.wave import PlaneWave
from app.services import trajectory as trajectory_service
from app.services.scattering import (
    comoving,
    is_incident,
    is_overtake,
    reflect_at_moving_bs,
    transmit_at_moving_bs,
)
from app.services.scenarios import source_wave, validate_scenario
from app.services.wavemodel import crest_speed, group_velocity
from app.utils.errors import EventExplosionError, ScenarioValidationError
from app.utils.numeric import time_slack

logger = logging.getLogger(__name__)

# 同一时刻：先分段/切换，再包络边到达，最后离开空间域
PRIORITY_BREAK = 0
PRIORITY_HIT = 1
PRIORITY_EXIT = 2

PHASE_MATCH_TOLERANCE = 1e-9

CrestKey = Tuple[int, int]  # (波列, 波前序号)


class WorldlinePoint(NamedTuple):
    object_id: str
    object_kind: str
    t: float
    x: float


@dataclass
class _RawEvent:
    seq: int
    time: float
    position: float
    kind: EventKind
    incident: object = ""                 # 包络边标签或 CrestKey
    products: list = field(default_factory=list)
    amplitude: float = 0.0


@dataclass
class _Incidence:
    """一段入射区间：期间分束器速度片段与产物不变"""
    train_id: int
    element: int
    t_start: float
    t_end: float = math.inf
    products: Dict[TrainRole, Optional[int]] = field(default_factory=dict)
    amplitudes: Dict[TrainRole, float] = field(default_factory=dict)


class _Element:
    """运行期分束器状态"""

    def __init__(self, index: int, spec: SplitterSpec, substeps: Optional[int]):
        self.index = index
        self.spec = spec
        self.trajectory = spec.trajectory
        self.pieces = trajectory_service.pieces(spec.trajectory, substeps=substeps)
        self.attached: List[int] = []   # 附着的边界 id（按附着顺序）

    def breakpoints(self, t_max: float) -> List[float]:
        t0 = self.trajectory.t0
        times = set(trajectory_service.breakpoints(self.pieces, t_max))
        times.update(s.time for s in self.spec.switches if t0 <= s.time <= t_max)
        return sorted(times)

    def state(self, t: float) -> Tuple[float, float]:
        return trajectory_service.state_at(self.trajectory, t)

    def position(self, t: float) -> float:
        return self.state(t)[0]

    @property
    def label(self) -> str:
        return f"b{self.index}"


def _same_wave(a: PlaneWave, b: PlaneWave) -> bool:
    if a.k != b.k or a.omega != b.omega or a.amplitude != b.amplitude:
        return False
    return abs(a.phase0 - b.phase0) <= PHASE_MATCH_TOLERANCE * max(1.0, abs(a.phase0))


class Tracer:
    """单次运行；运行结束后只读"""

    def __init__(self, scenario: Scenario, substeps: Optional[int] = None):
        self.scenario = scenario
        self.model = scenario.model
        self.t_max = scenario.run.t_max
        self.substeps = substeps if substeps is not None else scenario.run.substeps
        self.elements = [_Element(i, s, self.substeps) for i, s in enumerate(scenario.splitters)]
        self.source = source_wave(scenario)
        self.trains: List[Train] = []
        self.boundaries: List[Boundary] = []
        self.queue: list = []
        self.raw: List[_RawEvent] = []
        self.incidences: List[_Incidence] = []
        self.open_incidences: Dict[int, _Incidence] = {}
        self.products: Dict[Tuple[int, int, TrainRole], object] = {}
        self.discarded_weight = 0.0
        self.max_depth = 0
        self._seq = 0
        self._processed = 0

    # ================== 基础设施 ==================

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def _push(self, time: float, priority: int, item: tuple) -> None:
        heapq.heappush(self.queue, (time, priority, self._next_seq(), item))

    def _log(self, time, position, kind, incident="", products=None, amplitude=0.0) -> _RawEvent:
        event = _RawEvent(self._next_seq(), time, position, kind, incident,
                          list(products or []), amplitude)
        self.raw.append(event)
        if len(self.raw) > settings.max_events:
            raise EventExplosionError(len(self.raw), self.max_depth)
        logger.debug("t=%r x=%r %s %s -> %s", time, position, kind.value, incident, event.products)
        return event

    def _new_boundary(self, train_id: int, kind: EdgeKind) -> Boundary:
        boundary = Boundary(id=len(self.boundaries), train_id=train_id, kind=kind)
        self.boundaries.append(boundary)
        return boundary

    def _edge_kinds(self, wave: PlaneWave) -> Tuple[EdgeKind, EdgeKind]:
        """(下边界, 上边界) 的前沿/后沿类型"""
        if group_velocity(self.model, wave.k) < 0:
            return EdgeKind.FRONT, EdgeKind.BACK
        return EdgeKind.BACK, EdgeKind.FRONT

    def _schedule_line(self, boundary: Boundary) -> None:
        """安排自由包络边最早的一次分束器到达与离开空间域"""
        piece = boundary.current
        line = CrestLine(x_start=piece.x0, t_start=piece.t0, speed=piece.speed)
        best: Optional[Tuple[float, int]] = None
        for element in self.elements:
            t_hit = trajectory_service.first_crossing(
                element.trajectory, line, t_upper=self.t_max, exclude_start=True)
            if t_hit is not None and (best is None or t_hit < best[0]):
                best = (t_hit, element.index)
        if best is not None:
            self._push(best[0], PRIORITY_HIT, ("hit", boundary.id, boundary.version, best[1]))

        run = self.scenario.run
        if piece.speed > 0 and piece.x0 < run.x_max:
            t_exit, direction = piece.t0 + (run.x_max - piece.x0) / piece.speed, 1
        elif piece.speed < 0 and piece.x0 > run.x_min:
            t_exit, direction = piece.t0 + (run.x_min - piece.x0) / piece.speed, -1
        else:
            return
        if t_exit <= self.t_max:
            self._push(t_exit, PRIORITY_EXIT, ("exit", boundary.id, boundary.version, direction))

    # ================== 入射区间记录 ==================

    def _close_incidences(self, element: _Element, t: float) -> None:
        for bid in [b for b, rec in self.open_incidences.items() if rec.element == element.index]:
            record = self.open_incidences.pop(bid)
            record.t_end = t
            if record.t_end > record.t_start:
                self.incidences.append(record)

    def _open_incidence(self, boundary: Boundary, element: _Element, t: float) -> None:
        record = _Incidence(train_id=boundary.train_id, element=element.index, t_start=t)
        for role in (TrainRole.REFLECT, TrainRole.TRANSMIT):
            current = self.products.get((boundary.train_id, element.index, role))
            if isinstance(current, int):
                record.products[role] = current
                record.amplitudes[role] = abs(self.trains[current].wave.amplitude)
            else:
                record.products[role] = None
                record.amplitudes[role] = abs(current[1].amplitude) if current else 0.0
        self.open_incidences[boundary.id] = record

    # ================== 分束器结算 ==================

    def _product_wave(self, parent: Train, role: TrainRole, V: float, element: _Element,
                      t: float, ref: Tuple[float, float]) -> PlaneWave:
        optics = element.spec.optics_at(t)
        if role == TrainRole.REFLECT:
            return reflect_at_moving_bs(self.model, parent.wave, V, optics, at=ref)
        return transmit_at_moving_bs(self.model, parent.wave, V, optics)

    def _attached_boundary(self, train: Train, element: _Element) -> Optional[Boundary]:
        for boundary in (train.lower, train.upper):
            if boundary.element == element.index:
                return boundary
        return None

    def _product_valid(self, train: Train, element: _Element, V: float, t: float,
                       ref: Tuple[float, float], released: set) -> bool:
        parent = self.trains[train.parent_id]
        if not parent.alive:
            return False
        anchor = self._attached_boundary(parent, element)
        if anchor is None or anchor.mode != AttachMode.INCIDENT or anchor.id in released:
            return False
        expected = self._product_wave(parent, train.role, V, element, t, ref)
        return _same_wave(expected, train.wave)

    def _detach(self, boundary: Boundary, element: _Element, t: float, x: float) -> None:
        train = self.trains[boundary.train_id]
        boundary.close(t)
        element.attached.remove(boundary.id)
        boundary.start_line(x, t, group_velocity(self.model, train.wave.k))
        self._log(t, x, EventKind.EDGE_LAUNCH, boundary.label, [boundary.label],
                  abs(train.wave.amplitude))
        self._schedule_line(boundary)

    def _resolve(self, boundary: Boundary, element: _Element, t: float, x: float, V: float) -> None:
        """结束附着状态：能脱离就脱离，否则判为入射或扫过"""
        train = self.trains[boundary.train_id]
        side = train.side_of(boundary)
        v_g = group_velocity(self.model, train.wave.k)
        away = not comoving(v_g, V) and (v_g < V if side == Side.BELOW else v_g > V)
        if away:
            self._detach(boundary, element, t, x)
        elif is_incident(self.model, train.wave, side, V):
            boundary.mode = AttachMode.INCIDENT
        else:
            boundary.mode = AttachMode.SWEPT

    def _spawn(self, parent: Train, anchor: Boundary, element: _Element, role: TrainRole,
               wave: PlaneWave, side: Side, t: float, x: float) -> Train:
        train_id = len(self.trains)
        lower_kind, upper_kind = self._edge_kinds(wave)
        lower = self._new_boundary(train_id, lower_kind)
        upper = self._new_boundary(train_id, upper_kind)
        near, far = (upper, lower) if side == Side.BELOW else (lower, upper)
        near.start_track(t, element.index, element.trajectory, AttachMode.GENERATED,
                         element.position)
        element.attached.append(near.id)
        far.start_line(x, t, group_velocity(self.model, wave.k))

        chi = element.spec.optics_at(t).interface_phase if role == TrainRole.REFLECT else 0.0
        train = Train(
            id=train_id, wave=wave, role=role, lower=lower, upper=upper, born=t,
            depth=parent.depth + 1, parent_id=parent.id, element=element.index,
            front_offset=parent.front_offset + chi,
        )
        self.trains.append(train)
        self.max_depth = max(self.max_depth, train.depth)
        event = self._log(t, x, EventKind.EDGE_LAUNCH, anchor.label,
                          [near.label, far.label], abs(wave.amplitude))
        train.provenance = parent.provenance + [event.seq]
        self._schedule_line(far)
        return train

    def _feed(self, boundary: Boundary, element: _Element, t: float, x: float, V: float,
              ref: Tuple[float, float]) -> List[Train]:
        """确保入射波列的反射/透射产物存在"""
        train = self.trains[boundary.train_id]
        side = train.side_of(boundary)
        created: List[Train] = []
        for role in (TrainRole.REFLECT, TrainRole.TRANSMIT):
            key = (train.id, element.index, role)
            current = self.products.get(key)
            if isinstance(current, int):
                product = self.trains[current]
                near = self._attached_boundary(product, element)
                if product.alive and near is not None and near.mode == AttachMode.GENERATED:
                    continue
            wave = self._product_wave(train, role, V, element, t, ref)
            if isinstance(current, tuple) and _same_wave(current[1], wave):
                continue
            amplitude = abs(wave.amplitude)
            if amplitude == 0.0:
                self.products[key] = ("skip", wave)
                continue
            if amplitude < settings.amplitude_floor or train.depth + 1 > settings.max_depth:
                self.discarded_weight += amplitude * amplitude
                self.products[key] = ("skip", wave)
                logger.debug("pruned %s product of train %d (|a|=%r, depth=%d)",
                             role.value, train.id, amplitude, train.depth + 1)
                continue
            product_side = side if role == TrainRole.REFLECT else side.other
            product = self._spawn(train, boundary, element, role, wave, product_side, t, x)
            self.products[key] = product.id
            created.append(product)
        return created

    def _settle(self, element: _Element, t: float) -> List[Train]:
        piece = trajectory_service.piece_at(element.pieces, t)
        V = piece.velocity
        x_now = element.state(t)[0]
        ref = (element.state(piece.t_ref)[0], piece.t_ref)
        self._close_incidences(element, t)

        attached = [self.boundaries[i] for i in element.attached]
        released = set()
        for boundary in attached:
            if boundary.mode == AttachMode.INCIDENT:
                train = self.trains[boundary.train_id]
                if not is_incident(self.model, train.wave, train.side_of(boundary), V):
                    released.add(boundary.id)

        pending: List[Boundary] = []
        for boundary in attached:
            train = self.trains[boundary.train_id]
            if boundary.mode == AttachMode.INCIDENT:
                if boundary.id in released:
                    pending.append(boundary)
            elif boundary.mode == AttachMode.SWEPT:
                pending.append(boundary)
            elif not self._product_valid(train, element, V, t, ref, released):
                pending.append(boundary)
        for boundary in pending:
            self._resolve(boundary, element, t, x_now, V)

        created: List[Train] = []
        for bid in list(element.attached):
            boundary = self.boundaries[bid]
            if boundary.mode == AttachMode.INCIDENT:
                created.extend(self._feed(boundary, element, t, x_now, V, ref))
        for bid in element.attached:
            boundary = self.boundaries[bid]
            if boundary.mode == AttachMode.INCIDENT:
                self._open_incidence(boundary, element, t)
        return created

    # ================== 队列事件 ==================

    def _on_source_on(self, t: float) -> None:
        src = self.scenario.source
        lower_kind, upper_kind = self._edge_kinds(self.source)
        train_id = len(self.trains)
        lower = self._new_boundary(train_id, lower_kind)
        upper = self._new_boundary(train_id, upper_kind)
        lower.start_line(src.position, t, 0.0)
        upper.start_line(src.position, t, group_velocity(self.model, self.source.k))
        train = Train(id=train_id, wave=self.source, role=TrainRole.SOURCE,
                      lower=lower, upper=upper, born=t)
        self.trains.append(train)
        event = self._log(t, src.position, EventKind.SOURCE_ON, "src",
                          [upper.label, lower.label], abs(self.source.amplitude))
        train.provenance = [event.seq]
        self._schedule_line(upper)
        self._schedule_line(lower)

    def _on_source_off(self, t: float) -> None:
        src = self.scenario.source
        lower = self.trains[0].lower
        if lower.element is not None or not self.trains[0].alive:
            return
        lower.close(t)
        lower.start_line(src.position, t, group_velocity(self.model, self.source.k))
        self._log(t, src.position, EventKind.SOURCE_OFF, lower.label, [lower.label],
                  abs(self.source.amplitude))
        self._schedule_line(lower)

    def _on_break(self, t: float, element: _Element) -> None:
        for switch in element.spec.switches:
            if switch.time == t:
                kind = EventKind.SHUTTER_OPEN if switch.optics.r == 0.0 else EventKind.SHUTTER_ACTIVATE
                self._log(t, element.state(t)[0], kind, element.label, [], switch.optics.r)
        self._settle(element, t)

    def _on_hit(self, t: float, boundary: Boundary, element: _Element) -> None:
        train = self.trains[boundary.train_id]
        if not train.alive:
            return
        x = element.state(t)[0]
        other = train.other(boundary)
        boundary.close(t)
        if other.element == element.index:
            # 两条边界都到达同一分束器：波列被完全消耗
            other.close(t)
            element.attached.remove(other.id)
            other.element = None
            other.mode = None
            other.version += 1
            boundary.version += 1
            train.died = t
            self._log(t, x, EventKind.EDGE_ARRIVAL, boundary.label, [], abs(train.wave.amplitude))
            self._settle(element, t)
            return
        boundary.start_track(t, element.index, element.trajectory, AttachMode.SWEPT,
                             element.position)
        element.attached.append(boundary.id)
        event = self._log(t, x, EventKind.EDGE_ARRIVAL, boundary.label, [],
                          abs(train.wave.amplitude))
        created = self._settle(element, t)
        event.products = [p.lower.label if p.lower.element is None else p.upper.label
                          for p in created]

    def _on_exit(self, t: float, boundary: Boundary, direction: int) -> None:
        train = self.trains[boundary.train_id]
        if not train.alive:
            return
        boundary.exited = direction
        self._log(t, boundary.position(t), EventKind.DOMAIN_EXIT, boundary.label, [],
                  abs(train.wave.amplitude))
        other = train.other(boundary)
        if other.element is None and other.exited == direction:
            train.died = t
            boundary.close(t)
            other.close(t)

    def run(self) -> SimulationResult:
        src = self.scenario.source
        logger.info("tracing %s scenario: %d splitter(s), t_max=%r",
                    self.model.family.value, len(self.elements), self.t_max)
        self._push(src.t_on, PRIORITY_BREAK, ("source_on",))
        if src.t_off < self.t_max:
            self._push(src.t_off, PRIORITY_BREAK, ("source_off",))
        for element in self.elements:
            for t in element.breakpoints(self.t_max):
                if t >= src.t_on:
                    self._push(t, PRIORITY_BREAK, ("break", element.index))

        while self.queue:
            t, _, _, item = heapq.heappop(self.queue)
            if t > self.t_max:
                break
            self._processed += 1
            if self._processed > settings.max_events:
                raise EventExplosionError(self._processed, self.max_depth)
            kind = item[0]
            if kind == "source_on":
                self._on_source_on(t)
            elif kind == "source_off":
                self._on_source_off(t)
            elif kind == "break":
                self._on_break(t, self.elements[item[1]])
            else:
                boundary = self.boundaries[item[1]]
                if boundary.version != item[2]:
                    continue
                if kind == "hit":
                    self._on_hit(t, boundary, self.elements[item[3]])
                else:
                    self._on_exit(t, boundary, item[3])

        for element in self.elements:
            self._close_incidences(element, self.t_max)
        self._crest_events()
        self._detector_arrivals()
        result = self._build_result()
        logger.info("trace finished: %d events, %d trains, %d detector segments",
                    len(result.events), len(result.trains), len(result.segments))
        if self.discarded_weight > 1e-6 * result.source_weight:
            logger.warning("pruned amplitude weight %r exceeds 1e-6 of the source weight",
                           self.discarded_weight)
        return result

    # ================== 事后：波前事件与探测器 ==================

    def _front_phase(self, train: Train, n: int) -> float:
        spacing = self.scenario.source.crest_spacing
        return train.front_offset - 2.0 * math.pi * spacing * n

    def _crest_line(self, train: Train, n: int, t_ref: float) -> CrestLine:
        wave = train.wave
        x = (self._front_phase(train, n) - wave.phase0 + wave.omega * t_ref) / wave.k
        return CrestLine(x_start=x, t_start=t_ref, speed=crest_speed(self.model, wave))

    def _crest_events(self) -> None:
        spacing = self.scenario.source.crest_spacing
        for record in sorted(self.incidences, key=lambda r: (r.t_start, r.train_id, r.element)):
            train = self.trains[record.train_id]
            wave = train.wave
            if wave.k == 0.0:
                continue
            element = self.elements[record.element]
            t_a = record.t_start
            t_b = min(record.t_end, self.t_max)
            if not t_b > t_a:
                continue

            def front_index(t: float) -> float:
                phase = wave.k * element.state(t)[0] - wave.omega * t + wave.phase0
                return (train.front_offset - phase) / (2.0 * math.pi * spacing)

            n_a, n_b = front_index(t_a), front_index(t_b)
            first, last = math.ceil(min(n_a, n_b)), math.floor(max(n_a, n_b))
            if last - first > settings.max_events:
                raise EventExplosionError(last - first, self.max_depth)
            for n in range(first, last + 1):
                line = self._crest_line(train, n, t_a)
                t_cross = trajectory_service.first_crossing(element.trajectory, line, t_upper=t_b)
                if t_cross is None or (t_cross >= t_b and t_b < self.t_max):
                    continue
                x_cross, v_cross = element.state(t_cross)
                overtake = is_overtake(self.model, wave, v_cross)
                for role in (TrainRole.REFLECT, TrainRole.TRANSMIT):
                    if role == TrainRole.REFLECT:
                        kind = EventKind.REFLECT_OVERTAKE if overtake else EventKind.REFLECT_HEAD_ON
                    else:
                        kind = EventKind.TRANSMIT_OVERTAKE if overtake else EventKind.TRANSMIT_HEAD_ON
                    product = record.products.get(role)
                    products = [(product, n)] if product is not None else []
                    self._log(t_cross, x_cross, kind, (train.id, n), products,
                              record.amplitudes.get(role, 0.0))

    def _detector_arrivals(self) -> None:
        x_d = self.scenario.detector.position
        for train in self.trains:
            if group_velocity(self.model, train.wave.k) >= 0:
                continue
            end = min(train.died if train.died is not None else math.inf, self.t_max)
            for boundary in (train.lower, train.upper):
                for piece in boundary.pieces:
                    if piece.is_track or piece.speed == 0.0:
                        continue
                    t_cross = piece.t0 + (x_d - piece.x0) / piece.speed
                    if piece.t_start <= t_cross <= min(piece.t_end, end) and t_cross >= train.born:
                        self._log(t_cross, x_d, EventKind.DETECTOR_ARRIVAL, boundary.label, [],
                                  abs(train.wave.amplitude))

    def _piece_crossings(self, piece: BoundaryPiece, line: CrestLine, t_hi: float) -> List[float]:
        t_end = min(piece.t_end, t_hi)
        if t_end < piece.t_start:
            return []
        if piece.is_track:
            local = CrestLine(x_start=line.position(piece.t_start), t_start=piece.t_start,
                              speed=line.speed)
            return trajectory_service.crossings(piece.trajectory, local, t_upper=t_end)
        relative = piece.speed - line.speed
        if relative == 0.0:
            return []
        t_cross = (line.position(piece.t0) - piece.x0) / relative + piece.t0
        return [t_cross] if piece.t_start <= t_cross <= t_end else []

    def line_intervals(self, train: Train, line: CrestLine, t_from: float,
                       t_to: Optional[float] = None) -> List[Tuple[float, float]]:
        """直线世界线位于波列内部的时间区间"""
        t_lo = max(train.born, t_from)
        t_hi = min(train.died if train.died is not None else math.inf, self.t_max)
        if t_to is not None:
            t_hi = min(t_hi, t_to)
        if not t_hi > t_lo:
            return []
        times = {t_lo, t_hi}
        for boundary in (train.lower, train.upper):
            for piece in boundary.pieces:
                if t_lo < piece.t_start < t_hi:
                    times.add(piece.t_start)
                for t in self._piece_crossings(piece, line, t_hi):
                    if t_lo < t < t_hi:
                        times.add(t)
        ordered = sorted(times)
        intervals: List[Tuple[float, float]] = []
        for a, b in zip(ordered, ordered[1:]):
            if not b > a:
                continue
            mid = 0.5 * (a + b)
            x = line.position(mid)
            if train.lower.position(mid) <= x <= train.upper.position(mid):
                if intervals and intervals[-1][1] == a:
                    intervals[-1] = (intervals[-1][0], b)
                else:
                    intervals.append((a, b))
        return intervals

    # ================== 结果 ==================

    def _build_result(self) -> SimulationResult:
        ordered = sorted(self.raw, key=lambda e: (e.time, e.seq))
        seq_to_id = {e.seq: i for i, e in enumerate(ordered)}
        crest_ids: Dict[CrestKey, str] = {}
        crest_birth: Dict[CrestKey, _RawEvent] = {}
        crest_death: Dict[CrestKey, _RawEvent] = {}

        def crest_label(key: CrestKey) -> str:
            if key not in crest_ids:
                crest_ids[key] = f"c{len(crest_ids)}"
            return crest_ids[key]

        events: List[Event] = []
        for i, raw in enumerate(ordered):
            if isinstance(raw.incident, tuple):
                incident = crest_label(raw.incident)
                crest_death.setdefault(raw.incident, raw)
            else:
                incident = raw.incident
            products = []
            for item in raw.products:
                if isinstance(item, tuple):
                    products.append(crest_label(item))
                    crest_birth.setdefault(item, raw)
                else:
                    products.append(item)
            events.append(Event(id=i, time=raw.time, position=raw.position, kind=raw.kind,
                                incident_id=incident, product_ids=products,
                                amplitude_abs=raw.amplitude))

        crests = [self._crest_view(key, label, crest_birth.get(key), crest_death.get(key), seq_to_id)
                  for key, label in crest_ids.items()]
        edges = [self._edge_view(b) for b in self.boundaries]
        trains = [
            TrainSummary(
                id=t.id, wave=t.wave, role=t.role, depth=t.depth, parent_id=t.parent_id,
                element=t.element, born=t.born, died=t.died, lower_edge=t.lower.label,
                upper_edge=t.upper.label, provenance=[seq_to_id[s] for s in t.provenance],
            )
            for t in self.trains
        ]
        return SimulationResult(
            scenario=self.scenario,
            events=events,
            crests=crests,
            edges=edges,
            trains=trains,
            segments=self._detector_segments(seq_to_id),
            discarded_weight=self.discarded_weight,
            source_weight=abs(self.source.amplitude) ** 2,
            max_depth=self.max_depth,
            substeps=self.substeps,
        )

    def _crest_view(self, key: CrestKey, label: str, birth: Optional[_RawEvent],
                    death: Optional[_RawEvent], seq_to_id: Dict[int, int]) -> Crest:
        train = self.trains[key[0]]
        t_ref = birth.time if birth is not None else (death.time if death is not None else train.born)
        line = self._crest_line(train, key[1], t_ref)
        if birth is not None:
            t_birth = birth.time
            intervals = self.line_intervals(train, line, t_birth)
            t_death = intervals[0][1] if intervals else t_birth
        else:
            intervals = self.line_intervals(train, line, train.born)
            chosen = intervals[0] if intervals else (t_ref, t_ref)
            if death is not None:
                for interval in intervals:
                    if interval[0] <= death.time <= interval[1]:
                        chosen = interval
                        break
            t_birth, t_death = chosen
        if death is not None and t_birth <= death.time:
            t_death = min(t_death, death.time) if t_death > t_birth else death.time
        return Crest(
            id=label, train_id=train.id, index=key[1],
            birth=(line.position(t_birth), t_birth),
            death=(line.position(t_death), t_death),
            speed=line.speed, wave=train.wave,
            parent_event=seq_to_id[birth.seq] if birth is not None else None,
        )

    def _edge_view(self, boundary: Boundary) -> EnvelopeEdge:
        train = self.trains[boundary.train_id]
        end = min(train.died if train.died is not None else math.inf, self.t_max)
        pieces = []
        for piece in boundary.pieces:
            if piece.t_start > end:
                break
            t_end = min(piece.t_end, end)
            if piece.is_track:
                pieces.append(EdgePiece(t_start=piece.t_start, t_end=t_end, element=piece.element))
            else:
                pieces.append(EdgePiece(t_start=piece.t_start, t_end=t_end,
                                        x0=piece.x0, t0=piece.t0, speed=piece.speed))
        first = boundary.pieces[0]
        return EnvelopeEdge(
            id=boundary.label, train_id=train.id, kind=boundary.kind,
            birth=(first.position(first.t_start), first.t_start),
            speed=group_velocity(self.model, train.wave.k),
            pieces=pieces,
        )

    def _detector_segments(self, seq_to_id: Dict[int, int]) -> List[WaveSegment]:
        """探测器处的波列段；间隙不超过时间容差的区间合并，不长于容差的区间丢弃"""
        x_d = self.scenario.detector.position
        sight = CrestLine(x_start=x_d, t_start=0.0, speed=0.0)
        tolerance = settings.time_tolerance
        segments: List[WaveSegment] = []
        for train in self.trains:
            if group_velocity(self.model, train.wave.k) >= 0:
                continue
            intervals: List[Tuple[float, float]] = []
            for t_in, t_out in self.line_intervals(train, sight, train.born):
                if intervals and t_in - intervals[-1][1] <= time_slack(t_in, tolerance):
                    intervals[-1] = (intervals[-1][0], t_out)
                else:
                    intervals.append((t_in, t_out))
            for t_in, t_out in intervals:
                if t_out - t_in <= time_slack(t_out, tolerance):
                    logger.debug("dropped %r-long detector interval of train %d at t=%r",
                                 t_out - t_in, train.id, t_in)
                    continue
                segments.append(WaveSegment(
                    id=f"s{len(segments)}", train_id=train.id, wave=train.wave,
                    t_in=t_in, t_out=t_out,
                    provenance=[seq_to_id[s] for s in train.provenance],
                ))
        return segments


def run(scenario: Scenario, substeps: Optional[int] = None) -> SimulationResult:
    """校验并运行场景"""
    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    return Tracer(scenario, substeps=substeps).run()


# ================== 世界线数据集 ==================

def _line_samples(x0: float, t0: float, speed: float, t_a: float, t_b: float,
                  dt: float) -> List[Tuple[float, float]]:
    times = [t_a]
    if dt > 0:
        n = int(math.floor((t_b - t_a) / dt))
        times += [t_a + i * dt for i in range(1, n + 1) if t_a + i * dt < t_b]
    if t_b > t_a:
        times.append(t_b)
    return [(t, x0 + speed * (t - t0)) for t in times]


def _clip_line(x0: float, t0: float, speed: float, t_a: float, t_b: float,
               x_min: float, x_max: float) -> float:
    """直线段离开空间域的时刻（不超过 t_b）"""
    if speed > 0:
        return min(t_b, t0 + (x_max - x0) / speed)
    if speed < 0:
        return min(t_b, t0 + (x_min - x0) / speed)
    return t_b


def export_worldlines(result: SimulationResult, dt: Optional[float] = None) -> List[WorldlinePoint]:
    """
    时空图数据集：波源、探测器、分束器、包络边与采样波峰的折线

    事件顶点精确包含在折线中；事件之间直线段按 dt 采样，附着于分束器的段按轨迹采样。
    """
    scenario = result.scenario
    run_spec = scenario.run
    t_on = scenario.source.t_on
    t_max = run_spec.t_max
    if dt is None:
        dt = (t_max - t_on) / 1000.0
    points: List[WorldlinePoint] = []

    for t, x in _line_samples(scenario.source.position, t_on, 0.0, t_on, t_max, dt):
        points.append(WorldlinePoint("src", "source", t, x))
    for t, x in _line_samples(scenario.detector.position, t_on, 0.0, t_on, t_max, dt):
        points.append(WorldlinePoint("det", "detector", t, x))
    for i, splitter in enumerate(scenario.splitters):
        traj = splitter.trajectory
        for t, x in trajectory_service.sample(traj, traj.t0, t_max, dt):
            points.append(WorldlinePoint(f"b{i}", "beamsplitter", t, x))

    for edge in result.edges:
        vertices: List[Tuple[float, float]] = []
        for piece in edge.pieces:
            if piece.element is not None:
                traj = scenario.splitters[piece.element].trajectory
                samples = trajectory_service.sample(traj, piece.t_start, piece.t_end, dt)
            else:
                t_end = _clip_line(piece.x0, piece.t0, piece.speed, piece.t_start, piece.t_end,
                                   run_spec.x_min, run_spec.x_max)
                if t_end < piece.t_start:
                    break
                samples = _line_samples(piece.x0, piece.t0, piece.speed, piece.t_start, t_end, dt)
            for t, x in samples:
                if not vertices or t > vertices[-1][0]:
                    vertices.append((t, x))
        points.extend(WorldlinePoint(edge.id, "edge", t, x) for t, x in vertices)

    for crest in result.crests:
        (x_b, t_b), (_, t_d) = crest.birth, crest.death
        t_end = _clip_line(x_b, t_b, crest.speed, t_b, min(t_d, t_max),
                           run_spec.x_min, run_spec.x_max)
        for t, x in _line_samples(x_b, t_b, crest.speed, t_b, max(t_end, t_b), dt):
            points.append(WorldlinePoint(crest.id, "crest", t, x))
    return points
