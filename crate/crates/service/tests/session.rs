use gestigo_service::{Capture, ClientMessage, ErrorCode, SchemaDecl, ServerMessage, SessionState, Step};

fn hello() -> String {
    r#"{"type":"hello","version":1,"schema":{"joints":21,"fingertips":[4,8,12,16,20]}}"#.to_string()
}

fn frame(t: i64, joints: usize) -> String {
    ClientMessage::Frame {
        t_ms: t,
        xyz: (0..3 * joints).map(|i| (i as f64 * 0.01 + t as f64 * 0.001).sin()).collect(),
    }
    .to_json()
}

fn code(step: &Step) -> Option<ErrorCode> {
    match step {
        Step::Reply(ServerMessage::Error { code, .. }) | Step::Close(ServerMessage::Error { code, .. }) => Some(*code),
        _ => None,
    }
}

fn ready() -> SessionState {
    let mut s = SessionState::new(1, 1024);
    assert_eq!(s.on_text(&hello()), Step::Welcome);
    s
}

#[test]
fn unsupported_version_closes() {
    let mut s = SessionState::new(1, 1024);
    let step = s.on_text(r#"{"type":"hello","version":2,"schema":{"joints":21,"fingertips":[4,8,12,16,20]}}"#);
    assert!(matches!(step, Step::Close(ServerMessage::Error { code: ErrorCode::Version, .. })));
}

#[test]
fn unknown_joint_layout_closes() {
    let mut s = SessionState::new(1, 1024);
    let step = s.on_message(ClientMessage::Hello {
        version: 1,
        schema: SchemaDecl {
            joints: 21,
            fingertips: vec![1, 2],
        },
    });
    assert!(matches!(step, Step::Close(ServerMessage::Error { code: ErrorCode::Schema, .. })));
}

#[test]
fn messages_before_hello_are_out_of_order() {
    let mut s = SessionState::new(1, 1024);
    assert_eq!(code(&s.on_text(r#"{"type":"start"}"#)), Some(ErrorCode::Order));
    assert_eq!(s.on_text(&hello()), Step::Welcome);
    assert_eq!(code(&s.on_text(&hello())), Some(ErrorCode::Order));
}

#[test]
fn forty_frames_make_one_gesture() {
    let mut s = ready();
    assert_eq!(s.on_text(r#"{"type":"start"}"#), Step::Nothing);
    assert_eq!(s.capture(), Capture::Recording);
    for t in 0..40 {
        assert_eq!(s.on_text(&frame(t * 66, 21)), Step::Nothing);
    }
    let Step::Classify(g) = s.on_text(r#"{"type":"stop"}"#) else {
        panic!("expected a gesture")
    };
    assert_eq!((g.gesture_id, g.frames.len(), g.duration_ms()), (1, 40, 39 * 66));
    assert_eq!(g.frames[0].len(), 21);
    assert_eq!(s.capture(), Capture::Idle);
    assert_eq!(s.buffered(), 0);

    s.on_text(r#"{"type":"start"}"#);
    s.on_text(&frame(0, 21));
    s.on_text(&frame(5, 21));
    let Step::Classify(g) = s.on_text(r#"{"type":"stop"}"#) else { panic!() };
    assert_eq!(g.gesture_id, 2);
}

#[test]
fn frame_while_idle_is_rejected_and_the_session_continues() {
    let mut s = ready();
    assert_eq!(code(&s.on_text(&frame(0, 21))), Some(ErrorCode::Order));
    assert_eq!(code(&s.on_text(r#"{"type":"stop"}"#)), Some(ErrorCode::Order));
    s.on_text(r#"{"type":"start"}"#);
    assert_eq!(code(&s.on_text(r#"{"type":"start"}"#)), Some(ErrorCode::Order));
    s.on_text(&frame(0, 21));
    s.on_text(&frame(1, 21));
    assert!(matches!(s.on_text(r#"{"type":"stop"}"#), Step::Classify(_)));
}

#[test]
fn short_capture_is_an_empty_gesture() {
    let mut s = ready();
    s.on_text(r#"{"type":"start"}"#);
    s.on_text(&frame(0, 21));
    assert_eq!(code(&s.on_text(r#"{"type":"stop"}"#)), Some(ErrorCode::EmptyGesture));
    assert_eq!(s.capture(), Capture::Idle);
    s.on_text(r#"{"type":"start"}"#);
    assert_eq!(code(&s.on_text(r#"{"type":"stop"}"#)), Some(ErrorCode::EmptyGesture));
}

#[test]
fn full_buffer_overflows() {
    let mut s = SessionState::new(1, 4);
    s.on_text(&hello());
    s.on_text(r#"{"type":"start"}"#);
    for t in 0..4 {
        assert_eq!(s.on_text(&frame(t, 21)), Step::Nothing);
    }
    assert_eq!(code(&s.on_text(&frame(4, 21))), Some(ErrorCode::Overflow));
    assert_eq!((s.capture(), s.buffered()), (Capture::Idle, 0));
}

#[test]
fn malformed_input_is_reported_and_dropped() {
    let mut s = ready();
    assert_eq!(code(&s.on_text("{not json")), Some(ErrorCode::Malformed));
    assert_eq!(code(&s.on_text(r#"{"type":"dance"}"#)), Some(ErrorCode::Malformed));
    s.on_text(r#"{"type":"start"}"#);
    assert_eq!(code(&s.on_text(&frame(0, 20))), Some(ErrorCode::Malformed));
    s.on_text(&frame(10, 21));
    assert_eq!(code(&s.on_text(&frame(5, 21))), Some(ErrorCode::Malformed));
    assert_eq!(s.buffered(), 1);
}

#[test]
fn idle_timeout_stops_a_recording() {
    let mut s = ready();
    assert_eq!(s.on_idle_timeout(), Step::Nothing);
    s.on_text(r#"{"type":"start"}"#);
    for t in 0..3 {
        s.on_text(&frame(t, 21));
    }
    assert!(matches!(s.on_idle_timeout(), Step::Classify(g) if g.frames.len() == 3));
}
