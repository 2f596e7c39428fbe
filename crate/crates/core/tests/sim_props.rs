mod common;

use common::{fixture_session, fixture_site};
use guidebot::messages::StatusLabel;
use guidebot::navcore::FloorCell;
use guidebot::simrobot::Status;
use proptest::prelude::*;

const COMMANDS: [&str; 4] = [
    "hey a1 take me to the lab",
    "hey a1 the office please",
    "hey a1 stop",
    "hey a1 sing a song",
];

fn legal_move(site: &guidebot::navcore::SiteMap, a: &FloorCell, b: &FloorCell) -> bool {
    if a.floor_id == b.floor_id {
        let grid = site.floor(&a.floor_id).unwrap();
        a.cell == b.cell || grid.can_step(a.cell, b.cell)
    } else {
        site.shafts().iter().any(|s| {
            s.stop_on(&a.floor_id).is_some_and(|x| x.cell == a.cell)
                && s.stop_on(&b.floor_id).is_some_and(|x| x.cell == b.cell)
        })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Any interleaving of commands and ticks: the robot only makes legal
    /// moves, and once left alone it ends up where the last command said.
    #[test]
    fn last_command_wins(plan in prop::collection::vec((0..COMMANDS.len(), 0u64..12), 1..8)) {
        let site = fixture_site();
        let mut s = fixture_session();
        let mut last = None;
        let mut prev = s.state().position();
        for (cmd, ticks) in &plan {
            s.inject(COMMANDS[*cmd]).unwrap().1.unwrap();
            if *cmd != 3 {
                last = Some(*cmd);
            }
            for _ in 0..*ticks {
                s.step();
                let now = s.state().position();
                prop_assert!(legal_move(&site, &prev, &now), "{prev:?} -> {now:?}");
                prev = now;
            }
        }
        let before_settle = s.state().position();
        for _ in 0..200 {
            s.step();
            let now = s.state().position();
            prop_assert!(legal_move(&site, &prev, &now));
            prev = now;
        }
        let state = s.state_msg();
        match last {
            Some(0) => {
                prop_assert_eq!(state.status, StatusLabel::Idle);
                prop_assert_eq!(state.floor_id.as_str(), "1");
                prop_assert_eq!(state.cell, site.location("lab").unwrap().pose.cell);
            }
            Some(1) => {
                prop_assert_eq!(state.status, StatusLabel::Idle);
                prop_assert_eq!(state.floor_id.as_str(), "2");
                prop_assert_eq!(state.cell, site.location("office").unwrap().pose.cell);
            }
            Some(_) => {
                prop_assert_eq!(state.status, StatusLabel::Stopped);
                prop_assert_eq!(s.state().position(), before_settle);
            }
            None => prop_assert_eq!(state.status, StatusLabel::Idle),
        }
    }
}

#[test]
fn every_tick_makes_progress_until_arrival() {
    let mut s = fixture_session();
    s.inject(COMMANDS[1]).unwrap().1.unwrap();
    s.step();
    let mut remaining = match &s.state().status {
        Status::Navigating(nav) => nav.waypoint_count() - nav.next_waypoint_index,
        other => panic!("expected navigation, got {other:?}"),
    };
    let mut ticks = 1;
    while let Status::Navigating(nav) = &s.state().status {
        let left = nav.waypoint_count() - nav.next_waypoint_index;
        assert!(left <= remaining);
        remaining = left;
        s.step();
        ticks += 1;
        assert!(ticks < 200);
    }
    assert_eq!(s.state_msg().status, StatusLabel::Idle);
    let office = fixture_site().location("office").unwrap().pose.clone();
    assert_eq!(s.state().cell, office.cell);
    assert_eq!(s.state().heading_rad, office.heading_rad);
}
