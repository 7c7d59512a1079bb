//! Standard MIDI file export of decoded timelines (format 0, 480 ticks per
//! quarter). Melody on channel 1, chord voicings on channel 2.

use std::io::{self, Write};

use midly::num::{u15, u24, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};

use super::codec::Timeline;
use super::quantize::{POSITIONS_PER_BAR, POSITIONS_PER_BEAT};

pub const TICKS_PER_QUARTER: u32 = 480;
const TICKS_PER_POSITION: u32 = TICKS_PER_QUARTER / POSITIONS_PER_BEAT as u32;
const CHORD_VELOCITY: u8 = 60;

fn tick(bar: usize, position: u8) -> u32 {
    (bar as u32 * POSITIONS_PER_BAR as u32 + position as u32) * TICKS_PER_POSITION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Tempo(u32),
    Off { channel: u8, key: u8 },
    On { channel: u8, key: u8, velocity: u8 },
}

/// Serializes a timeline to SMF bytes.
pub fn timeline_to_midi(timeline: &Timeline) -> Vec<u8> {
    timeline_to_midi_with_text(timeline, None)
}

/// Like [`timeline_to_midi`], with an optional text meta event at tick 0.
pub fn timeline_to_midi_with_text(timeline: &Timeline, text: Option<&str>) -> Vec<u8> {
    let end = tick(timeline.bars, 0);
    let mut events: Vec<(u32, Kind)> = Vec::new();
    for t in &timeline.tempo {
        let micros = (60_000_000.0 / t.tempo.bpm()).round() as u32;
        events.push((tick(t.bar, t.position), Kind::Tempo(micros)));
    }
    for n in &timeline.notes {
        let on = tick(n.bar, n.position);
        events.push((on, Kind::On { channel: 0, key: n.pitch, velocity: n.velocity }));
        events.push((on + n.duration_units as u32 * TICKS_PER_POSITION, Kind::Off { channel: 0, key: n.pitch }));
    }
    for (i, c) in timeline.chords.iter().enumerate() {
        let on = tick(c.bar, c.position);
        let off = timeline.chords.get(i + 1).map_or(end, |next| tick(next.bar, next.position)).max(on);
        for &key in &c.pitches {
            events.push((on, Kind::On { channel: 1, key, velocity: CHORD_VELOCITY }));
            events.push((off, Kind::Off { channel: 1, key }));
        }
    }
    events.sort();

    let mut track = Vec::with_capacity(events.len() + 2);
    if let Some(text) = text {
        track.push(TrackEvent { delta: u28::new(0), kind: TrackEventKind::Meta(MetaMessage::Text(text.as_bytes())) });
    }
    let mut last = 0;
    for (at, kind) in events {
        let delta = u28::new(at - last);
        last = at;
        let kind = match kind {
            Kind::Tempo(micros) => TrackEventKind::Meta(MetaMessage::Tempo(u24::new(micros))),
            Kind::Off { channel, key } => TrackEventKind::Midi {
                channel: u4::new(channel),
                message: MidiMessage::NoteOff { key: u7::new(key), vel: u7::new(0) },
            },
            Kind::On { channel, key, velocity } => TrackEventKind::Midi {
                channel: u4::new(channel),
                message: MidiMessage::NoteOn { key: u7::new(key), vel: u7::new(velocity) },
            },
        };
        track.push(TrackEvent { delta, kind });
    }
    track.push(TrackEvent {
        delta: u28::new(end.saturating_sub(last)),
        kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
    });

    let smf = Smf {
        header: Header::new(Format::SingleTrack, Timing::Metrical(u15::new(TICKS_PER_QUARTER as u16))),
        tracks: vec![track],
    };
    let mut bytes = Vec::new();
    smf.write_std(&mut bytes).expect("writing to memory");
    bytes
}

pub fn write_midi<W: Write>(mut out: W, timeline: &Timeline) -> io::Result<()> {
    out.write_all(&timeline_to_midi(timeline))?;
    out.flush()
}
